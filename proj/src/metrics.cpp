#include "bitext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace bitext::metrics {

namespace {

using Counts = std::unordered_map<std::string, int64_t>;

Counts ngram_counts(const std::vector<std::string>& tokens, int n) {
    Counts c;
    if (static_cast<int>(tokens.size()) < n) return c;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++c[key];
    }
    return c;
}

} // namespace

double bleu_generation(const Sentences& candidates, const Sentences& references, int max_n,
                       bool eq_weights) {
    if (candidates.empty()) throw std::invalid_argument("bleu_generation: empty candidate list");
    if (references.empty()) throw std::invalid_argument("bleu_generation: empty reference corpus");
    if (max_n < 1) throw std::invalid_argument("bleu_generation: N must be >= 1");

    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        Counts best_ref;
        for (const auto& ref : references)
            for (const auto& [key, cnt] : ngram_counts(ref, n)) {
                auto it = best_ref.find(key);
                if (it == best_ref.end())
                    best_ref.emplace(key, cnt);
                else
                    it->second = std::max(it->second, cnt);
            }

        int64_t matched = 0, total = 0;
        for (const auto& cand : candidates) {
            for (const auto& [key, cnt] : ngram_counts(cand, n)) {
                total += cnt;
                auto it = best_ref.find(key);
                if (it != best_ref.end()) matched += std::min(cnt, it->second);
            }
        }
        // orders where no candidate is long enough contribute no factor, so
        // candidates drawn from the references still score 100 at any N
        if (total == 0) continue;
        if (matched == 0) return 0.0;
        const double w = eq_weights ? 1.0 / n : 1.0 / max_n;
        log_sum += w * std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    return 100.0 * std::exp(log_sum); // BP = 1: generation has no reference length
}

double bleu_translation(const Sentences& candidates, const Sentences& references) {
    if (candidates.size() != references.size())
        throw std::invalid_argument("bleu_translation: candidates and references must align");
    if (candidates.empty()) return 0.0;

    constexpr int kMaxN = 4;
    int64_t matched[kMaxN] = {0, 0, 0, 0};
    int64_t total[kMaxN] = {0, 0, 0, 0};
    int64_t cand_len = 0, ref_len = 0;

    for (size_t i = 0; i < candidates.size(); ++i) {
        cand_len += static_cast<int64_t>(candidates[i].size());
        ref_len += static_cast<int64_t>(references[i].size());
        for (int n = 1; n <= kMaxN; ++n) {
            Counts ref = ngram_counts(references[i], n);
            for (const auto& [key, cnt] : ngram_counts(candidates[i], n)) {
                total[n - 1] += cnt;
                auto it = ref.find(key);
                if (it != ref.end()) matched[n - 1] += std::min(cnt, it->second);
            }
        }
    }

    double log_sum = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
        if (total[n - 1] == 0 || matched[n - 1] == 0) return 0.0;
        log_sum += 0.25 * std::log(static_cast<double>(matched[n - 1]) / static_cast<double>(total[n - 1]));
    }
    if (cand_len == 0) return 0.0;
    const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
    return 100.0 * bp * std::exp(log_sum);
}

RnnLm::RnnLm(RnnLmConfig cfg, const text::Vocabulary& vocab, Rng& rng) : cfg_(cfg), vocab_(&vocab) {
    Rng init = rng.stream(0x1a);
    emb_ = &params_.add("lm.emb", nn::init_weight({vocab.size(), cfg_.emb_size}, init));
    cell_ = nn::LstmParams::create(params_, "lm.cell", cfg_.emb_size, cfg_.hidden, init);
    proj_w_ = &params_.add("lm.proj.w", nn::init_weight({cfg_.hidden, vocab.size()}, init));
    proj_b_ = &params_.add("lm.proj.b", Tensor::zeros({1, vocab.size()}));
}

void RnnLm::zero_parameters() {
    for (nn::Param& p : params_)
        std::fill(p.value.data.begin(), p.value.data.end(), 0.0);
}

double RnnLm::sentence_nll(const std::vector<int>& ids, nn::GradStore* grads, double scale) {
    std::vector<int> clipped(ids.begin(),
                             ids.begin() + std::min<size_t>(ids.size(), static_cast<size_t>(cfg_.max_len)));
    std::vector<int> inputs;
    inputs.push_back(cfg_.bos);
    inputs.insert(inputs.end(), clipped.begin(), clipped.end());
    std::vector<int> targets = clipped;
    targets.push_back(text::kEos);

    ad::Graph g;
    nn::Binding bind(g, grads != nullptr);
    ad::Var table = bind(*emb_);
    ad::Var embedded = ad::embed_lookup(table, inputs);
    nn::LstmState s = nn::lstm_zero_state(g, cfg_.hidden);
    std::vector<ad::Var> rows;
    rows.reserve(inputs.size());
    for (size_t t = 0; t < inputs.size(); ++t) {
        s = nn::lstm_step(g, bind, ad::slice(embedded, 0, static_cast<int>(t), 1), s, cell_);
        rows.push_back(ad::add(ad::matmul(s.h, bind(*proj_w_)), bind(*proj_b_)));
    }
    ad::Var loss = ad::cross_entropy(ad::concat(rows, 0), targets);
    const double mean_nll = g.value(loss).scalar();
    if (grads) bind.accumulate(g.backward(loss), *grads, scale);
    return mean_nll * static_cast<double>(targets.size());
}

double RnnLm::train(const std::vector<std::vector<int>>& corpus, int epochs) {
    if (corpus.empty()) throw std::invalid_argument("rnnlm: empty training corpus");
    nn::Adam opt(nn::AdamConfig{cfg_.lr, 0.9, 0.999, 1e-8});
    Rng order_rng = Rng(cfg_.seed).stream(0x0d);

    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[order_rng.below(i)]);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
            nn::GradStore grads;
            for (size_t i = start; i < end; ++i)
                sentence_nll(corpus[order[i]], &grads, 1.0 / static_cast<double>(end - start));
            opt.step(params_, grads);
        }
    }
    return perplexity(corpus);
}

double RnnLm::perplexity(const std::vector<std::vector<int>>& corpus) {
    if (corpus.empty()) throw std::invalid_argument("rnnlm: empty evaluation corpus");
    double nll = 0.0;
    int64_t tokens = 0;
    for (const auto& ids : corpus) {
        nll += sentence_nll(ids, nullptr);
        tokens += std::min<int64_t>(static_cast<int64_t>(ids.size()), cfg_.max_len) + 1; // + EOS
    }
    return std::exp(nll / static_cast<double>(tokens));
}

PplReport fwd_rev_report(const Sentences& real_train, const Sentences& real_test,
                         const Sentences& synthetic, const RnnLmConfig& cfg, int epochs) {
    PplReport report;

    text::Vocabulary forward_vocab = text::Vocabulary::build(real_train, 100000);
    auto encode_all = [](const text::Vocabulary& v, const Sentences& s) {
        std::vector<std::vector<int>> out;
        out.reserve(s.size());
        for (const auto& sent : s) out.push_back(v.encode(sent));
        return out;
    };

    {
        Rng rng(cfg.seed);
        RnnLm lm(cfg, forward_vocab, rng);
        lm.train(encode_all(forward_vocab, real_train), epochs);
        report.forward = lm.perplexity(encode_all(forward_vocab, synthetic));
    }
    {
        // reverse LM vocabulary comes from the synthetic samples themselves
        text::Vocabulary rev_vocab = text::Vocabulary::build(synthetic, 100000);
        Rng rng(cfg.seed + 1);
        RnnLm lm(cfg, rev_vocab, rng);
        lm.train(encode_all(rev_vocab, synthetic), epochs);
        report.reverse = lm.perplexity(encode_all(rev_vocab, real_test));
    }
    return report;
}

} // namespace bitext::metrics
