#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bitext/seq2seq.hpp"
#include "bitext/text.hpp"
#include "bitext/xlingual.hpp"

namespace bitext::nmt {

enum class Supervision { Supervised, Unsupervised };
enum class TranslatorMode { WordByWord, ModelBackTranslation, GroundTruth };

const char* translator_name(TranslatorMode m);

struct NmtConfig {
    Supervision mode = Supervision::Supervised;
    int layers = 1;
    bool use_adv = false; // the best reported configurations run without it
    int mtf_epoch = 5;
    text::NoiseConfig noise;
    double lr = 3e-4;
    double disc_lr = 5e-4;
    int batch_size = 32;
    int epochs = 10;
    int max_len = 20;
    int emb_size = 300;
    int hidden = 256;
    int attn_size = 256;
    int disc_hidden = 1024;
    bool lengthwise = false;
    bool trainable_embeddings = true;
    uint64_t seed = 1;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    TranslatorMode translator = TranslatorMode::GroundTruth;
    double recon0 = 0, recon1 = 0, cd0 = 0, cd1 = 0;
    double disc_loss = 0, enc_adv_loss = 0;
    double bleu_0to1 = 0, bleu_1to0 = 0;
    double enc_cosine_gap = 0; // distance between enc(s) and enc(reference translation)

    std::string line() const;
};

struct TrainData {
    // supervised mode: aligned pairs (lang 0, lang 1), content ids without EOS
    std::vector<std::pair<text::TokenSeq, text::TokenSeq>> pairs;
    // unsupervised mode: monolingual corpora plus the word-by-word bootstrap
    std::vector<text::TokenSeq> mono0, mono1;
    const xling::WbwTable* wbw = nullptr;
    // held-out aligned pairs for per-epoch metrics (both modes)
    std::vector<std::pair<text::TokenSeq, text::TokenSeq>> val_pairs;
};

// 3 x ReLU layers + one scalar score head over mean-pooled codes. Training
// uses the logit directly; predict() applies the sigmoid.
class LatentDiscriminator {
public:
    LatentDiscriminator(int code_depth, int hidden, Rng& rng);
    ad::Var score_rows(ad::Graph& g, nn::Binding& bind, ad::Var pooled_rows); // B x depth -> B x 1
    std::vector<double> predict(const std::vector<Tensor>& pooled);           // sigmoid probabilities
    nn::ParamSet& params() { return params_; }

private:
    nn::ParamSet params_;
    nn::Param *w1_, *b1_, *w2_, *b2_, *w3_, *b3_, *w4_, *b4_;
};

class NmtTrainer {
public:
    NmtTrainer(NmtConfig cfg, int vocab0, int vocab1);

    using EpochCallback = std::function<void(const EpochLog&)>;
    std::vector<EpochLog> train(const TrainData& data, const EpochCallback& on_epoch = nullptr);

    // encode without noise, greedy decode into the other language
    std::vector<int> translate(const std::vector<int>& content_ids, int src_lang);

    // Single-sentence losses; when grads is given, parameter gradients are
    // accumulated at the given scale.
    double reconstruction_loss(const text::TokenSeq& s, Rng& rng, nn::GradStore* grads = nullptr,
                               double scale = 1.0);
    double cross_domain_loss(const text::TokenSeq& s, const text::TokenSeq& translated, Rng& rng,
                             nn::GradStore* grads = nullptr, double scale = 1.0);

    TranslatorMode translator_for_epoch(int epoch) const;

    nn::BilingualModel& model() { return *model_; }
    const NmtConfig& config() const { return cfg_; }
    LatentDiscriminator* discriminator() { return disc_.get(); } // null without use_adv

private:
    struct SentenceStats {
        double recon = 0, cd = 0, adv = 0;
        Tensor pooled_code; // detached, for the discriminator step
    };
    SentenceStats train_sentence(const text::TokenSeq& s, const std::optional<text::TokenSeq>& translated,
                                 Rng rng, nn::GradStore* grads, double scale);
    double discriminator_step(const std::vector<Tensor>& pooled, const std::vector<int>& langs);
    double validation_bleu(const TrainData& data, int src_lang);
    double encoder_cosine_gap(const TrainData& data);

    NmtConfig cfg_;
    std::unique_ptr<nn::BilingualModel> model_;
    std::unique_ptr<nn::Adam> opt_;
    std::unique_ptr<LatentDiscriminator> disc_;
    std::unique_ptr<nn::RmsProp> disc_opt_;
};

} // namespace bitext::nmt
