#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "bitext/metrics.hpp"
#include "bitext/synth.hpp"

using namespace bitext;
using namespace bitext::metrics;

namespace {

// Brute-force BLEU oracle, written independently of the implementation:
// explicit n-gram lists, std::map counting, direct formula evaluation.
using Sent = std::vector<std::string>;

std::vector<Sent> ngrams_of(const Sent& s, int n) {
    std::vector<Sent> out;
    for (int i = 0; i + n <= static_cast<int>(s.size()); ++i)
        out.emplace_back(s.begin() + i, s.begin() + i + n);
    return out;
}

std::map<Sent, int> count_ngrams(const Sent& s, int n) {
    std::map<Sent, int> c;
    for (const auto& g : ngrams_of(s, n)) ++c[g];
    return c;
}

double oracle_translation_bleu(const std::vector<Sent>& cands, const std::vector<Sent>& refs) {
    double cand_len = 0, ref_len = 0;
    double log_p = 0;
    for (int n = 1; n <= 4; ++n) {
        double clipped = 0, total = 0;
        for (size_t i = 0; i < cands.size(); ++i) {
            auto cc = count_ngrams(cands[i], n);
            auto rc = count_ngrams(refs[i], n);
            for (const auto& [g, cnt] : cc) {
                total += cnt;
                auto it = rc.find(g);
                clipped += std::min(cnt, it == rc.end() ? 0 : it->second);
            }
        }
        if (clipped == 0 || total == 0) return 0.0;
        log_p += 0.25 * std::log(clipped / total);
    }
    for (size_t i = 0; i < cands.size(); ++i) {
        cand_len += static_cast<double>(cands[i].size());
        ref_len += static_cast<double>(refs[i].size());
    }
    const double bp = cand_len > 0 ? std::min(1.0, std::exp(1.0 - ref_len / cand_len)) : 0.0;
    return 100.0 * bp * std::exp(log_p);
}

double oracle_generation_bleu(const std::vector<Sent>& cands, const std::vector<Sent>& refs, int max_n) {
    double log_p = 0;
    for (int n = 1; n <= max_n; ++n) {
        std::map<Sent, int> best;
        for (const auto& r : refs)
            for (const auto& [g, cnt] : count_ngrams(r, n)) best[g] = std::max(best[g], cnt);
        double clipped = 0, total = 0;
        for (const auto& c : cands)
            for (const auto& [g, cnt] : count_ngrams(c, n)) {
                total += cnt;
                auto it = best.find(g);
                clipped += std::min(cnt, it == best.end() ? 0 : it->second);
            }
        if (total == 0) continue;
        if (clipped == 0) return 0.0;
        log_p += (1.0 / max_n) * std::log(clipped / total);
    }
    return 100.0 * std::exp(log_p);
}

std::vector<Sent> random_corpus(Rng& rng, size_t n_sents, int max_words) {
    const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
    std::vector<Sent> out;
    for (size_t i = 0; i < n_sents; ++i) {
        Sent s;
        const int len = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_words)));
        for (int j = 0; j < len; ++j) s.push_back(alphabet[rng.below(alphabet.size())]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

TEST_CASE("bleu_generation: hand examples") {
    std::vector<Sent> refs = {{"the", "cat", "sat", "on", "the", "mat"}};

    // all n-grams of the candidate appear in the reference: BP=1 ignores brevity
    CHECK(bleu_generation({{"the", "cat", "sat"}}, refs, 3) == doctest::Approx(100.0).epsilon(1e-9));

    // candidates drawn from the references score 100 for all N
    std::vector<Sent> corpus = {{"a", "b", "c"}, {"d", "e", "a", "b"}};
    for (int n = 2; n <= 4; ++n)
        CHECK(bleu_generation({corpus[0]}, corpus, n) == doctest::Approx(100.0).epsilon(1e-9));

    // one unseen word: p1 = 2/3, p2 = 1/2 -> 100 * sqrt(1/3)
    const double expected = 100.0 * std::exp(0.5 * (std::log(2.0 / 3.0) + std::log(1.0 / 2.0)));
    CHECK(expected == doctest::Approx(57.735026918962575).epsilon(1e-12));
    CHECK(bleu_generation({{"the", "cat", "gleeb"}}, refs, 2) == doctest::Approx(expected).epsilon(1e-9));

    // unseen 4-grams zero out the whole score
    CHECK(bleu_generation({{"cat", "the", "mat", "on"}}, refs, 4) == 0.0);
}

TEST_CASE("bleu_generation: equals the brute-force oracle on random corpora") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto cands = random_corpus(rng, 4, 6);
        auto refs = random_corpus(rng, 6, 7);
        for (int n = 2; n <= 5; ++n) {
            CHECK(bleu_generation(cands, refs, n) ==
                  doctest::Approx(oracle_generation_bleu(cands, refs, n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("bleu_generation: monotone in N") {
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        auto cands = random_corpus(rng, 5, 8);
        auto refs = random_corpus(rng, 8, 8);
        double prev = bleu_generation(cands, refs, 1);
        for (int n = 2; n <= 5; ++n) {
            const double cur = bleu_generation(cands, refs, n);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("bleu_generation: adding a candidate equal to a reference never lowers the score") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        auto cands = random_corpus(rng, 4, 6);
        auto refs = random_corpus(rng, 5, 6);
        for (int n = 2; n <= 4; ++n) {
            const double before = bleu_generation(cands, refs, n);
            auto more = cands;
            more.push_back(refs[0]);
            CHECK(bleu_generation(more, refs, n) >= before - 1e-9);
        }
    }
}

TEST_CASE("bleu_generation: paper-equation weights mode (1/n) available behind the flag") {
    std::vector<Sent> refs = {{"the", "cat", "sat", "on", "the", "mat"}};
    std::vector<Sent> cands = {{"the", "cat", "gleeb"}};
    // p1 = 2/3, p2 = 1/2 with w_n = 1/n: exp(ln(2/3) + 0.5 ln(1/2))
    const double expected = 100.0 * std::exp(std::log(2.0 / 3.0) + 0.5 * std::log(0.5));
    CHECK(bleu_generation(cands, refs, 2, /*eq_weights=*/true) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bleu_translation: identical corpora 100, empty candidate 0, half-length BP") {
    std::vector<Sent> refs = {{"a", "b", "c", "d"}, {"e", "a", "b", "c"}};
    CHECK(bleu_translation(refs, refs) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(bleu_translation({{}, {}}, refs) == 0.0);

    // perfect prefixes at half length: all p_n = 1, BP = exp(1 - 2) = e^-1
    std::vector<Sent> refs8 = {{"a", "b", "c", "d", "a", "b", "c", "d"}};
    std::vector<Sent> half = {{"a", "b", "c", "d"}};
    CHECK(bleu_translation(half, refs8) == doctest::Approx(100.0 * std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("bleu_translation: exact match against the brute-force oracle on 20-sentence corpora") {
    Rng rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        auto refs = random_corpus(rng, 20, 8);
        auto cands = random_corpus(rng, 20, 8);
        // mix in near-misses so scores are not all zero
        for (size_t i = 0; i < cands.size(); i += 2) {
            cands[i] = refs[i];
            if (cands[i].size() > 1 && trial % 2) cands[i][0] = "z";
        }
        CHECK(bleu_translation(cands, refs) ==
              doctest::Approx(oracle_translation_bleu(cands, refs)).epsilon(1e-12));
    }
}

TEST_CASE("perplexity: uniform model scores exactly |V|") {
    std::vector<std::vector<std::string>> corpus = {{"u", "v", "w"}, {"u", "u"}};
    text::Vocabulary vocab = text::Vocabulary::build(corpus, 45); // |V| = 50
    Rng rng(31);
    RnnLmConfig cfg;
    cfg.emb_size = 6;
    cfg.hidden = 5;
    RnnLm lm(cfg, vocab, rng);
    lm.zero_parameters();
    std::vector<std::vector<int>> ids = {vocab.encode(corpus[0]), vocab.encode(corpus[1])};
    CHECK(vocab.size() == 8); // 5 reserved + u, v, w
    CHECK(lm.perplexity(ids) == doctest::Approx(8.0).epsilon(1e-6));
    CHECK(lm.perplexity(ids) >= 1.0);
}

TEST_CASE("perplexity: matches a hand-computed two-token case") {
    std::vector<std::vector<std::string>> corpus = {{"u", "v"}};
    text::Vocabulary vocab = text::Vocabulary::build(corpus, 2); // ids: u=5, v=6; |V|=7
    Rng rng(32);
    RnnLmConfig cfg;
    cfg.emb_size = 4;
    cfg.hidden = 3;
    RnnLm lm(cfg, vocab, rng);
    lm.zero_parameters();
    // with zero weights except a projection bias, every step predicts softmax(bias)
    nn::Param* bias = lm.params().find("lm.proj.b");
    REQUIRE(bias != nullptr);
    bias->value.at(0, 5) = std::log(2.0);
    bias->value.at(0, text::kEos) = std::log(4.0);

    // sentence [u]: targets are u then EOS
    double z = 0;
    for (int j = 0; j < 7; ++j) z += std::exp(bias->value.at(0, j));
    const double p_u = 2.0 / z, p_eos = 4.0 / z;
    const double expected = std::exp(-(std::log(p_u) + std::log(p_eos)) / 2.0);
    CHECK(lm.perplexity({vocab.encode({"u"})}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("perplexity: invariant to corpus sentence order") {
    synth::CipherSpec spec = synth::CipherSpec::make(20, 3, 6, 5);
    auto pairs = synth::make_corpus(spec, 30, 3);
    std::vector<std::vector<std::string>> sents;
    for (const auto& p : pairs) sents.push_back(p.first);
    text::Vocabulary vocab = text::Vocabulary::build(sents, 100);
    std::vector<std::vector<int>> ids, rev;
    for (const auto& s : sents) ids.push_back(vocab.encode(s));
    rev.assign(ids.rbegin(), ids.rend());

    Rng rng(33);
    RnnLmConfig cfg;
    cfg.emb_size = 8;
    cfg.hidden = 8;
    RnnLm lm(cfg, vocab, rng);
    CHECK(lm.perplexity(ids) == doctest::Approx(lm.perplexity(rev)).epsilon(1e-12));
}

TEST_CASE("rnnlm: memorizes a single repeated sentence") {
    std::vector<std::vector<std::string>> corpus(40, {"u", "v", "w", "u"});
    text::Vocabulary vocab = text::Vocabulary::build(corpus, 10);
    std::vector<std::vector<int>> ids;
    for (const auto& s : corpus) ids.push_back(vocab.encode(s));

    Rng rng(34);
    RnnLmConfig cfg;
    cfg.emb_size = 12;
    cfg.hidden = 12;
    cfg.lr = 0.02;
    RnnLm lm(cfg, vocab, rng);
    const double ppl = lm.train(ids, 25);
    CHECK(ppl < 1.25);

    // deterministic per seed
    Rng rng2(34);
    RnnLm lm2(cfg, vocab, rng2);
    CHECK(lm2.train(ids, 25) == doctest::Approx(ppl).epsilon(1e-15));
}

TEST_CASE("rnnlm: beats the unigram baseline on structured sentences") {
    synth::CipherSpec spec = synth::CipherSpec::make(20, 3, 6, 6);
    auto pairs = synth::make_corpus(spec, 120, 4);
    std::vector<std::vector<std::string>> sents;
    for (const auto& p : pairs) sents.push_back(p.first);
    text::Vocabulary vocab = text::Vocabulary::build(sents, 100);
    std::vector<std::vector<int>> ids;
    for (const auto& s : sents) ids.push_back(vocab.encode(s));

    // unigram oracle: MLE over tokens + EOS
    std::map<int, int64_t> counts;
    int64_t total = 0;
    for (const auto& s : ids) {
        for (int id : s) ++counts[id], ++total;
        ++counts[text::kEos];
        ++total;
    }
    double nll = 0;
    for (const auto& s : ids) {
        for (int id : s) nll -= std::log(static_cast<double>(counts[id]) / total);
        nll -= std::log(static_cast<double>(counts[text::kEos]) / total);
    }
    const double unigram_ppl = std::exp(nll / static_cast<double>(total));

    Rng rng(35);
    RnnLmConfig cfg;
    cfg.emb_size = 16;
    cfg.hidden = 16;
    cfg.lr = 0.01;
    RnnLm lm(cfg, vocab, rng);
    const double lm_ppl = lm.train(ids, 10);
    CHECK(lm_ppl < unigram_ppl);
}

TEST_CASE("fwd_rev_report: degenerate synthetic corpus gives large reverse perplexity") {
    synth::CipherSpec spec = synth::CipherSpec::make(20, 3, 6, 7);
    auto pairs = synth::make_corpus(spec, 80, 8);
    std::vector<std::vector<std::string>> real;
    for (const auto& p : pairs) real.push_back(p.first);
    std::vector<std::vector<std::string>> real_train(real.begin(), real.begin() + 60);
    std::vector<std::vector<std::string>> real_test(real.begin() + 60, real.end());

    RnnLmConfig cfg;
    cfg.emb_size = 12;
    cfg.hidden = 12;
    cfg.lr = 0.02;
    cfg.batch_size = 8;
    cfg.seed = 3;

    // synthetic == held-out real data: forward PPL close to the LM's real test PPL
    PplReport healthy = fwd_rev_report(real_train, real_test, real_test, cfg, 20);
    // degenerate single-sentence synthetic corpus: collapsed support
    std::vector<std::vector<std::string>> collapsed(40, real[0]);
    PplReport degenerate = fwd_rev_report(real_train, real_test, collapsed, cfg, 20);

    CHECK(degenerate.reverse > 2.0 * healthy.reverse);
    CHECK(healthy.forward > 1.0);
    CHECK(degenerate.forward >= 1.0);
}
