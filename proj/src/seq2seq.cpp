#include "bitext/seq2seq.hpp"

#include <algorithm>
#include <stdexcept>

namespace bitext::nn {

using ad::Var;

BilingualModel::BilingualModel(ModelConfig cfg, Rng& rng) : cfg_(cfg) {
    if (cfg_.layers != 1 && cfg_.layers != 2)
        throw std::invalid_argument("model: encoder layers must be 1 or 2");
    if (cfg_.vocab0 < text::kNumReserved || cfg_.vocab1 < text::kNumReserved)
        throw std::invalid_argument("model: vocabulary sizes not set");

    emb0_ = &params_.add("emb0", init_weight({cfg_.vocab0, cfg_.emb_size}, rng), cfg_.trainable_embeddings);
    emb1_ = &params_.add("emb1", init_weight({cfg_.vocab1, cfg_.emb_size}, rng), cfg_.trainable_embeddings);

    enc_fwd1_ = LstmParams::create(params_, "enc.fwd1", cfg_.emb_size, cfg_.hidden, rng);
    enc_bwd1_ = LstmParams::create(params_, "enc.bwd1", cfg_.emb_size, cfg_.hidden, rng);
    if (cfg_.layers == 2) {
        enc_fwd2_ = LstmParams::create(params_, "enc.fwd2", 2 * cfg_.hidden, cfg_.hidden, rng);
        enc_bwd2_ = LstmParams::create(params_, "enc.bwd2", 2 * cfg_.hidden, cfg_.hidden, rng);
    }

    dec_ = LstmParams::create(params_, "dec", cfg_.emb_size + 2 * cfg_.hidden, cfg_.hidden, rng);

    att_code_ = &params_.add("att.code", init_weight({2 * cfg_.hidden, cfg_.attn_size}, rng));
    att_dec_ = &params_.add("att.dec", init_weight({cfg_.hidden, cfg_.attn_size}, rng));
    att_bias_ = &params_.add("att.bias", Tensor::zeros({1, cfg_.attn_size}));
    att_v_ = &params_.add("att.v", init_weight({cfg_.attn_size, 1}, rng));
    att_out_w_ = &params_.add("att.out.w", init_weight({3 * cfg_.hidden, cfg_.hidden}, rng));
    att_out_b_ = &params_.add("att.out.b", Tensor::zeros({1, cfg_.hidden}));

    proj_w0_ = &params_.add("proj0.w", init_weight({cfg_.hidden, cfg_.vocab0}, rng));
    proj_b0_ = &params_.add("proj0.b", Tensor::zeros({1, cfg_.vocab0}));
    proj_w1_ = &params_.add("proj1.w", init_weight({cfg_.hidden, cfg_.vocab1}, rng));
    proj_b1_ = &params_.add("proj1.b", Tensor::zeros({1, cfg_.vocab1}));
}

namespace {

// forward and backward hidden rows for one bidirectional layer
struct BiRows {
    std::vector<Var> fwd, bwd; // each 1 x H, indexed by timestep
};

BiRows run_bilstm(ad::Graph& g, Binding& bind, const std::vector<Var>& inputs, const LstmParams& fw,
                  const LstmParams& bw, int hidden) {
    const int t_len = static_cast<int>(inputs.size());
    BiRows rows;
    rows.fwd.resize(t_len);
    rows.bwd.resize(t_len);
    LstmState s = lstm_zero_state(g, hidden);
    for (int t = 0; t < t_len; ++t) {
        s = lstm_step(g, bind, inputs[t], s, fw);
        rows.fwd[t] = s.h;
    }
    s = lstm_zero_state(g, hidden);
    for (int t = t_len - 1; t >= 0; --t) {
        s = lstm_step(g, bind, inputs[t], s, bw);
        rows.bwd[t] = s.h;
    }
    return rows;
}

} // namespace

Var BilingualModel::encode(ad::Graph& g, Binding& bind, const std::vector<int>& tokens, int lang) {
    if (tokens.empty()) throw std::invalid_argument("encode: empty token sequence");
    if (lang != 0 && lang != 1) throw std::invalid_argument("encode: lang must be 0 or 1");

    Var table = bind(embedding(lang));
    Var embedded = ad::embed_lookup(table, tokens); // T x E
    const int t_len = static_cast<int>(tokens.size());

    std::vector<Var> inputs(t_len);
    for (int t = 0; t < t_len; ++t) inputs[t] = ad::slice(embedded, 0, t, 1);

    BiRows rows = run_bilstm(g, bind, inputs, enc_fwd1_, enc_bwd1_, cfg_.hidden);
    if (cfg_.layers == 2) {
        // the second layer consumes per-timestep [fwd||bwd] features; the
        // code is taken from the top layer only
        std::vector<Var> mid(t_len);
        for (int t = 0; t < t_len; ++t) mid[t] = ad::concat({rows.fwd[t], rows.bwd[t]}, 1);
        rows = run_bilstm(g, bind, mid, enc_fwd2_, enc_bwd2_, cfg_.hidden);
    }

    std::vector<Var> code_rows;
    if (cfg_.lengthwise_concat) {
        code_rows.reserve(2 * static_cast<size_t>(t_len));
        for (int t = 0; t < t_len; ++t) code_rows.push_back(rows.fwd[t]);
        for (int t = 0; t < t_len; ++t) code_rows.push_back(rows.bwd[t]);
    } else {
        code_rows.reserve(static_cast<size_t>(t_len));
        for (int t = 0; t < t_len; ++t) code_rows.push_back(ad::concat({rows.fwd[t], rows.bwd[t]}, 1));
    }
    return ad::concat(code_rows, 0);
}

AttentionResult BilingualModel::attention_context(ad::Graph&, Binding& bind, Var dec_state, Var code) {
    // additive scoring: v' tanh(code W_c + s W_d + b), broadcast over rows
    Var keys = ad::matmul(code, bind(*att_code_));            // T x A
    Var query = ad::matmul(dec_state, bind(*att_dec_));       // 1 x A
    Var act = ad::tanh(ad::add(ad::add(keys, query), bind(*att_bias_)));
    Var scores = ad::transpose(ad::matmul(act, bind(*att_v_))); // 1 x T
    Var weights = ad::softmax(scores);
    return {ad::matmul(weights, code), weights};
}

Var BilingualModel::decoder_logits(ad::Graph& g, Binding& bind, Var code, const std::vector<int>& inputs,
                                   int lang) {
    Var table = bind(embedding(lang));
    Var w_proj = bind(lang == 0 ? *proj_w0_ : *proj_w1_);
    Var b_proj = bind(lang == 0 ? *proj_b0_ : *proj_b1_);

    Var embedded = ad::embed_lookup(table, inputs);
    LstmState s = lstm_zero_state(g, cfg_.hidden);
    std::vector<Var> logit_rows;
    logit_rows.reserve(inputs.size());
    for (size_t t = 0; t < inputs.size(); ++t) {
        Var emb_row = ad::slice(embedded, 0, static_cast<int>(t), 1);
        AttentionResult att = attention_context(g, bind, s.h, code);
        Var x = ad::concat({emb_row, att.context}, 1);
        s = lstm_step(g, bind, x, s, dec_);
        Var readout = ad::tanh(ad::add(ad::matmul(ad::concat({s.h, att.context}, 1), bind(*att_out_w_)),
                                       bind(*att_out_b_)));
        logit_rows.push_back(ad::add(ad::matmul(readout, w_proj), b_proj));
    }
    return ad::concat(logit_rows, 0); // T x V
}

Var BilingualModel::decode_teacher(ad::Graph& g, Binding& bind, Var code, const std::vector<int>& targets,
                                   int lang) {
    if (targets.empty()) throw std::invalid_argument("decode_teacher: empty target sequence");
    std::vector<int> inputs;
    inputs.reserve(targets.size());
    inputs.push_back(text::bos_id(lang));
    inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
    Var logits = decoder_logits(g, bind, code, inputs, lang);
    return ad::cross_entropy(logits, targets);
}

std::vector<int> BilingualModel::decode_greedy(ad::Graph& g, Binding& bind, Var code, int lang,
                                               int max_len) {
    if (max_len < 1) throw std::invalid_argument("decode_greedy: max_len must be >= 1");
    Var table = bind(embedding(lang));
    Var w_proj = bind(lang == 0 ? *proj_w0_ : *proj_w1_);
    Var b_proj = bind(lang == 0 ? *proj_b0_ : *proj_b1_);

    std::vector<int> out;
    int prev = text::bos_id(lang);
    LstmState s = lstm_zero_state(g, cfg_.hidden);
    for (int t = 0; t < max_len; ++t) {
        Var emb_row = ad::embed_lookup(table, {prev});
        AttentionResult att = attention_context(g, bind, s.h, code);
        Var x = ad::concat({emb_row, att.context}, 1);
        s = lstm_step(g, bind, x, s, dec_);
        Var readout = ad::tanh(ad::add(ad::matmul(ad::concat({s.h, att.context}, 1), bind(*att_out_w_)),
                                       bind(*att_out_b_)));
        const Tensor& logits = g.value(ad::add(ad::matmul(readout, w_proj), b_proj));
        // control tokens are never emitted: EOS may only terminate, BOS/PAD
        // are excluded from the argmax outright
        int best = -1;
        for (int v = 0; v < logits.cols(); ++v) {
            if (v == text::kPad || v == text::kBosL0 || v == text::kBosL1) continue;
            if (best < 0 || logits.at(0, v) > logits.at(0, best)) best = v;
        }
        if (best == text::kEos) break;
        out.push_back(best);
        prev = best;
    }
    return out;
}

std::vector<int> BilingualModel::translate(const std::vector<int>& tokens_with_eos, int src_lang,
                                           int tgt_lang, int max_len) {
    if (tokens_with_eos.empty()) throw std::invalid_argument("translate: empty input");
    ad::Graph g;
    Binding bind(g, /*with_grads=*/false);
    Var code = encode(g, bind, tokens_with_eos, src_lang);
    return decode_greedy(g, bind, code, tgt_lang, max_len);
}

Var mean_rows(ad::Graph& g, Var matrix) {
    const Tensor& m = g.value(matrix);
    Var ones = g.constant(Tensor::full({1, m.shape[0]}, 1.0 / m.shape[0]));
    return ad::matmul(ones, matrix);
}

} // namespace bitext::nn
