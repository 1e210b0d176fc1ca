#pragma once

#include <string>
#include <vector>

#include "bitext/nn.hpp"
#include "bitext/text.hpp"

namespace bitext::nn {

struct ModelConfig {
    int emb_size = 300;
    int hidden = 256;     // per direction; the code matrix depth is 2*hidden
    int layers = 1;       // 1 or 2 bidirectional encoder layers
    int attn_size = 256;  // alignment layer width
    int vocab0 = 0;
    int vocab1 = 0;
    bool lengthwise_concat = false; // NC ablation: 2T x H instead of T x 2H
    bool trainable_embeddings = true;
};

struct AttentionResult {
    ad::Var context; // 1 x code_depth
    ad::Var weights; // 1 x T, non-negative, sums to 1
};

// Shared bilingual sequence-to-sequence model. The encoder and all decoder
// weights are shared across languages; only the embedding tables and the
// output projection heads are per-language.
class BilingualModel {
public:
    BilingualModel(ModelConfig cfg, Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    int code_depth() const { return 2 * cfg_.hidden; }

    Param& embedding(int lang) { return *(lang == 0 ? emb0_ : emb1_); }
    int vocab_size(int lang) const { return lang == 0 ? cfg_.vocab0 : cfg_.vocab1; }

    // Code matrix for a token sequence (typically content + EOS): T x 2H rows
    // of [forward_t || backward_t], or the 2T x H lengthwise layout when the
    // ablation flag is set.
    ad::Var encode(ad::Graph& g, Binding& bind, const std::vector<int>& tokens, int lang);

    AttentionResult attention_context(ad::Graph& g, Binding& bind, ad::Var dec_state, ad::Var code);

    // Teacher-forced decode; returns the mean token cross-entropy against
    // `targets` (which must end with EOS).
    ad::Var decode_teacher(ad::Graph& g, Binding& bind, ad::Var code, const std::vector<int>& targets,
                           int lang);

    // Greedy decode from a language-specific BOS until EOS or max_len tokens;
    // the returned ids contain neither BOS nor EOS nor PAD.
    std::vector<int> decode_greedy(ad::Graph& g, Binding& bind, ad::Var code, int lang, int max_len);

    // encode (no noise) + greedy decode in one value-only graph
    std::vector<int> translate(const std::vector<int>& tokens_with_eos, int src_lang, int tgt_lang,
                               int max_len);

private:
    ad::Var decoder_logits(ad::Graph& g, Binding& bind, ad::Var code, const std::vector<int>& inputs,
                           int lang);

    ModelConfig cfg_;
    ParamSet params_;
    Param *emb0_ = nullptr, *emb1_ = nullptr;
    LstmParams enc_fwd1_, enc_bwd1_;
    LstmParams enc_fwd2_, enc_bwd2_; // used when layers == 2
    LstmParams dec_;
    Param *att_code_ = nullptr; // 2H x A
    Param *att_dec_ = nullptr;  // H x A
    Param *att_bias_ = nullptr; // 1 x A
    Param *att_v_ = nullptr;    // A x 1
    Param *att_out_w_ = nullptr; // (H + 2H) x H, attentional output vector
    Param *att_out_b_ = nullptr; // 1 x H
    Param *proj_w0_ = nullptr, *proj_b0_ = nullptr;
    Param *proj_w1_ = nullptr, *proj_b1_ = nullptr;
};

// Mean over the rows of a T x D matrix as a 1 x D graph node.
ad::Var mean_rows(ad::Graph& g, ad::Var matrix);

} // namespace bitext::nn
