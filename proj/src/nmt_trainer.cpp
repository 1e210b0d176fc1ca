#include "bitext/nmt_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bitext/metrics.hpp"

namespace bitext::nmt {

const char* translator_name(TranslatorMode m) {
    switch (m) {
        case TranslatorMode::WordByWord: return "wbw";
        case TranslatorMode::ModelBackTranslation: return "model";
        case TranslatorMode::GroundTruth: return "ground-truth";
    }
    return "?";
}

void NmtConfig::validate() const {
    if (!noise.valid()) throw std::invalid_argument("nmt config: invalid noise settings");
    if (mode == Supervision::Unsupervised && mtf_epoch < 1)
        throw std::invalid_argument("nmt config: mtf_epoch must be >= 1 in unsupervised mode");
    if (layers != 1 && layers != 2) throw std::invalid_argument("nmt config: layers must be 1 or 2");
    if (batch_size < 1 || epochs < 0 || max_len < 2)
        throw std::invalid_argument("nmt config: bad batch/epoch/max_len settings");
}

std::string EpochLog::line() const {
    std::ostringstream os;
    os << "epoch=" << epoch << " translator=" << translator_name(translator) << " recon0=" << recon0
       << " recon1=" << recon1 << " cd0=" << cd0 << " cd1=" << cd1;
    os << " disc=" << disc_loss << " enc_adv=" << enc_adv_loss;
    os << " bleu_0to1=" << bleu_0to1 << " bleu_1to0=" << bleu_1to0 << " enc_gap=" << enc_cosine_gap;
    return os.str();
}

LatentDiscriminator::LatentDiscriminator(int code_depth, int hidden, Rng& rng) {
    Rng init = rng.stream(0xD15C);
    w1_ = &params_.add("disc.w1", nn::init_weight({code_depth, hidden}, init));
    b1_ = &params_.add("disc.b1", Tensor::zeros({1, hidden}));
    w2_ = &params_.add("disc.w2", nn::init_weight({hidden, hidden}, init));
    b2_ = &params_.add("disc.b2", Tensor::zeros({1, hidden}));
    w3_ = &params_.add("disc.w3", nn::init_weight({hidden, hidden}, init));
    b3_ = &params_.add("disc.b3", Tensor::zeros({1, hidden}));
    w4_ = &params_.add("disc.w4", nn::init_weight({hidden, 1}, init));
    b4_ = &params_.add("disc.b4", Tensor::zeros({1, 1}));
}

ad::Var LatentDiscriminator::score_rows(ad::Graph& g, nn::Binding& bind, ad::Var pooled_rows) {
    using namespace ad;
    Var h = relu(add(matmul(pooled_rows, bind(*w1_)), bind(*b1_)));
    h = relu(add(matmul(h, bind(*w2_)), bind(*b2_)));
    h = relu(add(matmul(h, bind(*w3_)), bind(*b3_)));
    return add(matmul(h, bind(*w4_)), bind(*b4_)); // B x 1 logits
}

std::vector<double> LatentDiscriminator::predict(const std::vector<Tensor>& pooled) {
    std::vector<double> out;
    out.reserve(pooled.size());
    for (const Tensor& row : pooled) {
        ad::Graph g;
        nn::Binding bind(g, false);
        ad::Var s = score_rows(g, bind, g.constant(row));
        out.push_back(1.0 / (1.0 + std::exp(-g.value(s).scalar())));
    }
    return out;
}

NmtTrainer::NmtTrainer(NmtConfig cfg, int vocab0, int vocab1) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    nn::ModelConfig mc;
    mc.emb_size = cfg_.emb_size;
    mc.hidden = cfg_.hidden;
    mc.layers = cfg_.layers;
    mc.attn_size = cfg_.attn_size;
    mc.vocab0 = vocab0;
    mc.vocab1 = vocab1;
    mc.lengthwise_concat = cfg_.lengthwise;
    mc.trainable_embeddings = cfg_.trainable_embeddings;
    model_ = std::make_unique<nn::BilingualModel>(mc, rng);
    opt_ = std::make_unique<nn::Adam>(nn::AdamConfig{cfg_.lr, 0.5, 0.999, 1e-8});
    if (cfg_.use_adv) {
        disc_ = std::make_unique<LatentDiscriminator>(model_->code_depth(), cfg_.disc_hidden, rng);
        disc_opt_ = std::make_unique<nn::RmsProp>(nn::RmsPropConfig{cfg_.disc_lr, 0.9, 1e-8});
    }
}

TranslatorMode NmtTrainer::translator_for_epoch(int epoch) const {
    if (cfg_.mode == Supervision::Supervised) return TranslatorMode::GroundTruth;
    return epoch < cfg_.mtf_epoch ? TranslatorMode::WordByWord : TranslatorMode::ModelBackTranslation;
}

std::vector<int> NmtTrainer::translate(const std::vector<int>& content_ids, int src_lang) {
    if (content_ids.empty()) throw std::invalid_argument("translate: empty input sentence");
    std::vector<int> with_eos = content_ids;
    with_eos.push_back(text::kEos);
    return model_->translate(with_eos, src_lang, 1 - src_lang, cfg_.max_len);
}

NmtTrainer::SentenceStats NmtTrainer::train_sentence(const text::TokenSeq& s,
                                                     const std::optional<text::TokenSeq>& translated,
                                                     Rng rng, nn::GradStore* grads, double scale) {
    using namespace ad;
    SentenceStats stats;
    Graph g;
    nn::Binding bind(g, grads != nullptr);

    std::vector<int> targets = s.ids;
    targets.push_back(text::kEos);

    // reconstruction: decode the noised encoding back to the sentence
    text::TokenSeq noisy = text::apply_noise(s, cfg_.noise, rng);
    std::vector<int> enc_in = noisy.ids;
    enc_in.push_back(text::kEos);
    Var code = model_->encode(g, bind, enc_in, s.lang);
    Var noisy_code = cfg_.noise.sigma > 0 ? gaussian_noise_add(code, cfg_.noise.sigma, rng) : code;
    Var recon = model_->decode_teacher(g, bind, noisy_code, targets, s.lang);
    Var total = recon;

    // cross-domain: reconstruct from the (noised) translation's encoding
    Var cd{};
    if (translated) {
        text::TokenSeq noisy_tr = text::apply_noise(*translated, cfg_.noise, rng);
        std::vector<int> tr_in = noisy_tr.ids;
        tr_in.push_back(text::kEos);
        Var tr_code = model_->encode(g, bind, tr_in, translated->lang);
        Var tr_code_noisy = cfg_.noise.sigma > 0 ? gaussian_noise_add(tr_code, cfg_.noise.sigma, rng) : tr_code;
        cd = model_->decode_teacher(g, bind, tr_code_noisy, targets, s.lang);
        total = add(total, cd);
    }

    // adversarial: make the discriminator read the wrong language from the code
    if (disc_) {
        Var pooled = nn::mean_rows(g, code);
        stats.pooled_code = g.value(pooled);
        nn::Binding disc_bind(g, false); // encoder fools a frozen copy
        Var logit = disc_->score_rows(g, disc_bind, pooled);
        Var logits2 = concat({g.constant(Tensor::zeros({1, 1})), logit}, 1);
        Var fool = cross_entropy(logits2, {1 - s.lang});
        stats.adv = g.value(fool).scalar();
        total = add(total, fool);
    } else {
        // pooled code still useful to callers (e.g. tests)
        stats.pooled_code = g.value(nn::mean_rows(g, code));
    }

    stats.recon = g.value(recon).scalar();
    if (translated) stats.cd = g.value(cd).scalar();

    if (!std::isfinite(stats.recon) || (translated && !std::isfinite(stats.cd)))
        throw std::runtime_error("nmt: non-finite loss (recon=" + std::to_string(stats.recon) +
                                 ", cd=" + std::to_string(stats.cd) + "); diverged");

    if (grads) bind.accumulate(g.backward(total), *grads, scale);
    return stats;
}

double NmtTrainer::reconstruction_loss(const text::TokenSeq& s, Rng& rng, nn::GradStore* grads,
                                       double scale) {
    Rng local = rng;
    SentenceStats st = train_sentence(s, std::nullopt, local, grads, scale);
    rng = local;
    return st.recon;
}

double NmtTrainer::cross_domain_loss(const text::TokenSeq& s, const text::TokenSeq& translated, Rng& rng,
                                     nn::GradStore* grads, double scale) {
    if (cfg_.mode == Supervision::Supervised && translated.ids.empty())
        throw std::invalid_argument("cross_domain_loss: ground-truth mode requires an aligned pair");
    // isolate the cross-domain term: a graph with only the cd path
    using namespace ad;
    Graph g;
    nn::Binding bind(g, grads != nullptr);
    std::vector<int> targets = s.ids;
    targets.push_back(text::kEos);
    text::TokenSeq noisy_tr = text::apply_noise(translated, cfg_.noise, rng);
    std::vector<int> tr_in = noisy_tr.ids;
    tr_in.push_back(text::kEos);
    Var tr_code = model_->encode(g, bind, tr_in, translated.lang);
    Var tr_code_noisy = cfg_.noise.sigma > 0 ? gaussian_noise_add(tr_code, cfg_.noise.sigma, rng) : tr_code;
    Var cd = model_->decode_teacher(g, bind, tr_code_noisy, targets, s.lang);
    if (grads) bind.accumulate(g.backward(cd), *grads, scale);
    return g.value(cd).scalar();
}

double NmtTrainer::discriminator_step(const std::vector<Tensor>& pooled, const std::vector<int>& langs) {
    using namespace ad;
    Graph g;
    nn::Binding bind(g);
    const int depth = pooled[0].cols();
    Tensor rows({static_cast<int>(pooled.size()), depth});
    for (size_t i = 0; i < pooled.size(); ++i)
        for (int d = 0; d < depth; ++d) rows.at(static_cast<int>(i), d) = pooled[i].at(0, d);
    Var logit = disc_->score_rows(g, bind, g.leaf(std::move(rows), false));
    Var logits2 = concat({g.constant(Tensor::zeros({static_cast<int>(pooled.size()), 1})), logit}, 1);
    Var loss = cross_entropy(logits2, langs);
    nn::GradStore grads;
    bind.accumulate(g.backward(loss), grads, 1.0);
    disc_opt_->step(disc_->params(), grads);
    return g.value(loss).scalar();
}

double NmtTrainer::validation_bleu(const TrainData& data, int src_lang) {
    if (data.val_pairs.empty()) return 0.0;
    metrics::Sentences cands, refs;
    for (const auto& [s0, s1] : data.val_pairs) {
        const auto& src = src_lang == 0 ? s0 : s1;
        const auto& ref = src_lang == 0 ? s1 : s0;
        std::vector<int> out = translate(src.ids, src_lang);
        std::vector<std::string> cand, r;
        for (int id : out) cand.push_back(std::to_string(id));
        for (int id : ref.ids) r.push_back(std::to_string(id));
        cands.push_back(std::move(cand));
        refs.push_back(std::move(r));
    }
    return metrics::bleu_translation(cands, refs);
}

double NmtTrainer::encoder_cosine_gap(const TrainData& data) {
    const size_t n = std::min<size_t>(data.val_pairs.size(), 64);
    if (n == 0) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        auto pooled = [&](const text::TokenSeq& s) {
            ad::Graph g;
            nn::Binding bind(g, false);
            std::vector<int> in = s.ids;
            in.push_back(text::kEos);
            return g.value(nn::mean_rows(g, model_->encode(g, bind, in, s.lang)));
        };
        Tensor a = pooled(data.val_pairs[i].first);
        Tensor b = pooled(data.val_pairs[i].second);
        double dot = 0, na = 0, nb = 0;
        for (int64_t k = 0; k < a.numel(); ++k) {
            dot += a.data[k] * b.data[k];
            na += a.data[k] * a.data[k];
            nb += b.data[k] * b.data[k];
        }
        const double denom = std::sqrt(na) * std::sqrt(nb);
        total += denom > 0 ? 1.0 - dot / denom : 1.0;
    }
    return total / static_cast<double>(n);
}

namespace {

struct SentenceJob {
    const text::TokenSeq* s = nullptr;
    std::optional<text::TokenSeq> translated;
    uint64_t stream = 0;
};

} // namespace

std::vector<EpochLog> NmtTrainer::train(const TrainData& data, const EpochCallback& on_epoch) {
    if (cfg_.mode == Supervision::Supervised && data.pairs.empty())
        throw std::invalid_argument("train: supervised mode requires aligned pairs");
    if (cfg_.mode == Supervision::Unsupervised) {
        if (data.mono0.empty() || data.mono1.empty())
            throw std::invalid_argument("train: unsupervised mode requires two monolingual corpora");
        if (!data.wbw) throw std::invalid_argument("train: unsupervised mode requires a word-by-word table");
    }

    const Rng seed_root(cfg_.seed);
    uint64_t sentence_serial = 0;

    // one optimizer step per job batch; jobs run in parallel, gradients merge
    // in job order so results do not depend on the thread count
    auto run_batch = [&](const std::vector<SentenceJob>& jobs, EpochLog& log, int& n0, int& n1) {
        const double scale = 1.0 / static_cast<double>(jobs.size());
        std::vector<SentenceStats> stats(jobs.size());
        std::vector<nn::GradStore> stores(jobs.size());
        std::string error;

#pragma omp parallel for schedule(dynamic)
        for (size_t i = 0; i < jobs.size(); ++i) {
            try {
                stats[i] = train_sentence(*jobs[i].s, jobs[i].translated, seed_root.stream(jobs[i].stream),
                                          &stores[i], scale);
            } catch (const std::exception& e) {
#pragma omp critical
                error = e.what();
            }
        }
        if (!error.empty()) throw std::runtime_error(error);

        nn::GradStore grads;
        std::vector<Tensor> pooled;
        std::vector<int> langs;
        for (size_t i = 0; i < jobs.size(); ++i) {
            grads.merge_from(stores[i], model_->params());
            const int lang = jobs[i].s->lang;
            (lang == 0 ? n0 : n1) += 1;
            (lang == 0 ? log.recon0 : log.recon1) += stats[i].recon;
            (lang == 0 ? log.cd0 : log.cd1) += stats[i].cd;
            log.enc_adv_loss += stats[i].adv;
            if (disc_) {
                pooled.push_back(stats[i].pooled_code);
                langs.push_back(lang);
            }
        }
        opt_->step(model_->params(), grads);
        if (disc_ && !pooled.empty()) log.disc_loss += discriminator_step(pooled, langs);
    };

    auto shuffled = [&](size_t n, uint64_t stream) {
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng = seed_root.stream(stream);
        for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        return order;
    };

    std::vector<EpochLog> logs;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        const TranslatorMode tmode = translator_for_epoch(epoch);
        EpochLog log;
        log.epoch = epoch;
        log.translator = tmode;
        int n0 = 0, n1 = 0, batches = 0;

        if (cfg_.mode == Supervision::Supervised) {
            std::vector<size_t> order = shuffled(data.pairs.size(), 0xE000 + static_cast<uint64_t>(epoch));
            for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
                const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
                std::vector<SentenceJob> jobs;
                for (size_t i = start; i < end; ++i) {
                    const auto& [s0, s1] = data.pairs[order[i]];
                    jobs.push_back({&s0, s1, sentence_serial++});
                    jobs.push_back({&s1, s0, sentence_serial++});
                }
                run_batch(jobs, log, n0, n1);
                ++batches;
            }
        } else {
            // alternate batches of both languages within the epoch
            std::vector<size_t> order0 = shuffled(data.mono0.size(), 0xA000 + static_cast<uint64_t>(epoch));
            std::vector<size_t> order1 = shuffled(data.mono1.size(), 0xB000 + static_cast<uint64_t>(epoch));
            const size_t bs = static_cast<size_t>(cfg_.batch_size);
            const size_t rounds = (std::max(order0.size(), order1.size()) + bs - 1) / bs;
            for (size_t round = 0; round < rounds; ++round) {
                for (int lang = 0; lang < 2; ++lang) {
                    const auto& order = lang == 0 ? order0 : order1;
                    const auto& mono = lang == 0 ? data.mono0 : data.mono1;
                    const size_t start = round * bs;
                    if (start >= order.size()) continue;
                    const size_t end = std::min(order.size(), start + bs);
                    std::vector<SentenceJob> jobs;
                    for (size_t i = start; i < end; ++i) {
                        const text::TokenSeq& s = mono[order[i]];
                        text::TokenSeq translated;
                        if (tmode == TranslatorMode::WordByWord) {
                            translated = xling::translate_wbw(s, *data.wbw);
                        } else {
                            translated.ids = translate(s.ids, s.lang);
                            translated.lang = 1 - s.lang;
                            if (translated.ids.empty()) translated.ids.push_back(text::kUnk);
                        }
                        jobs.push_back({&s, std::move(translated), sentence_serial++});
                    }
                    run_batch(jobs, log, n0, n1);
                    ++batches;
                }
            }
        }

        log.recon0 /= std::max(1, n0);
        log.cd0 /= std::max(1, n0);
        log.recon1 /= std::max(1, n1);
        log.cd1 /= std::max(1, n1);
        log.enc_adv_loss /= std::max(1, n0 + n1);
        log.disc_loss /= std::max(1, batches);
        log.bleu_0to1 = validation_bleu(data, 0);
        log.bleu_1to0 = validation_bleu(data, 1);
        log.enc_cosine_gap = encoder_cosine_gap(data);
        logs.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return logs;
}

} // namespace bitext::nmt
