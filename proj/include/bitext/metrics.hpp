#pragma once

#include <string>
#include <vector>

#include "bitext/nn.hpp"
#include "bitext/text.hpp"

namespace bitext::metrics {

using Sentences = std::vector<std::vector<std::string>>;

// N-gram statistics of one candidate set: clipped matches and totals per n.
struct NGramStats {
    std::vector<int64_t> matches; // index n-1
    std::vector<int64_t> totals;
};

// Corpus-level generation BLEU with BP = 1: every reference sentence is
// available to every candidate, counts are clipped against the best count in
// the whole reference corpus and micro-averaged. With eq_weights the n-gram
// log-probabilities are weighted 1/n instead of the standard 1/N.
double bleu_generation(const Sentences& candidates, const Sentences& references, int max_n,
                       bool eq_weights = false);

// Standard corpus BLEU-4 against one aligned reference per candidate, with
// brevity penalty min(1, exp(1 - ref_len/cand_len)) over corpus totals.
double bleu_translation(const Sentences& candidates, const Sentences& references);

struct RnnLmConfig {
    int emb_size = 300;
    int hidden = 256;
    int max_len = 20;
    int bos = text::kBosL0;
    double lr = 1e-3;
    int batch_size = 32;
    uint64_t seed = 1;
};

// Single-layer LSTM language model used for forward/reverse perplexity.
class RnnLm {
public:
    RnnLm(RnnLmConfig cfg, const text::Vocabulary& vocab, Rng& rng);

    // Adam cross-entropy training; returns the final training-set perplexity.
    double train(const std::vector<std::vector<int>>& corpus, int epochs);

    // exp(mean per-token cross entropy), EOS included, PAD never present.
    double perplexity(const std::vector<std::vector<int>>& corpus);

    void zero_parameters(); // uniform predictions: perplexity == |V|

    const text::Vocabulary& vocab() const { return *vocab_; }
    nn::ParamSet& params() { return params_; }

private:
    double sentence_nll(const std::vector<int>& ids, nn::GradStore* grads, double scale = 1.0);

    RnnLmConfig cfg_;
    const text::Vocabulary* vocab_;
    nn::ParamSet params_;
    nn::Param* emb_;
    nn::LstmParams cell_;
    nn::Param *proj_w_, *proj_b_;
};

struct PplReport {
    double forward = 0.0; // LM on real train, scored on synthetic
    double reverse = 0.0; // LM on synthetic, scored on real test
};

// Forward/reverse perplexity; the reverse LM uses a vocabulary induced from
// the synthetic samples.
PplReport fwd_rev_report(const Sentences& real_train, const Sentences& real_test,
                         const Sentences& synthetic, const RnnLmConfig& cfg, int epochs);

} // namespace bitext::metrics
