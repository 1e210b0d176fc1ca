#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "bitext/seq2seq.hpp"

namespace bitext::gan {

struct GanConfig {
    double lambda = 10.0;
    int critic_per_gen = 1;
    int noise_dim = 100;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int max_len = 21; // code rows (token count including EOS)
    int batch_size = 16;
    int steps = 500;
    uint64_t seed = 1;

    void validate() const;
};

// noise -> linear -> max_len x depth -> 5 residual 1-d conv blocks -> tanh
class Generator {
public:
    Generator(const GanConfig& cfg, int code_depth, Rng& rng);
    ad::Var build(ad::Graph& g, nn::Binding& bind, ad::Var noise_row); // 1 x noise_dim in
    Tensor generate(const Tensor& noise_row);                         // value-only
    nn::ParamSet& params() { return params_; }
    int code_depth() const { return depth_; }
    int max_len() const { return max_len_; }
    int noise_dim() const { return noise_dim_; }

private:
    int depth_, max_len_, noise_dim_;
    nn::ParamSet params_;
    nn::Param *lin_w_, *lin_b_;
    std::vector<nn::Param*> conv_w_, conv_b_; // 5 blocks
};

// 5 residual 1-d conv blocks + linear head to one score; built only from the
// double-differentiable op subset so the gradient penalty can backpropagate.
class Critic {
public:
    Critic(const GanConfig& cfg, int code_depth, Rng& rng);
    ad::Var score(ad::Graph& g, nn::Binding& bind, ad::Var code); // scalar
    nn::ParamSet& params() { return params_; }

private:
    int depth_, max_len_;
    nn::ParamSet params_;
    std::vector<nn::Param*> conv_w_, conv_b_;
    nn::Param *head_w_, *head_b_;
};

// Encoder output for a sequence (content + EOS), zero-padded to max_len rows.
// The encoder is read-only here; no noise is applied.
Tensor real_code(nn::BilingualModel& model, const std::vector<int>& tokens_with_eos, int lang, int max_len);

// (||grad_c D(c_bar)||_2 - 1)^2 at c_bar = alpha real + (1-alpha) fake, one
// alpha per pair; differentiable w.r.t. the critic parameters bound in `bind`.
ad::Var gradient_penalty(ad::Graph& g, nn::Binding& bind, Critic& critic, const Tensor& real,
                         const Tensor& fake, Rng& rng);

struct StepLosses {
    double critic_loss = 0;
    double gen_loss = 0;
    double wasserstein = 0; // mean over languages of E D(real) - E D(fake)
    double grad_penalty = 0;
};

class GanTrainer {
public:
    GanTrainer(GanConfig cfg, nn::BilingualModel& frozen_model, Rng& rng);

    // one iteration: critic_per_gen critic updates then one generator update;
    // real0/real1 are padded code matrices for each language
    StepLosses step(const std::vector<Tensor>& real0, const std::vector<Tensor>& real1);

    Generator& generator() { return *gen_; }
    Critic& critic() { return *critic_; }
    Tensor sample_noise();

private:
    double critic_update(const std::vector<Tensor>& real0, const std::vector<Tensor>& real1,
                         double& wasserstein, double& penalty);
    double generator_update(size_t batch);

    GanConfig cfg_;
    nn::BilingualModel* model_;
    std::unique_ptr<Generator> gen_;
    std::unique_ptr<Critic> critic_;
    std::unique_ptr<nn::Adam> gen_opt_, critic_opt_;
    Rng rng_;
};

// Decode n generated codes with both language heads; same code, two outputs.
std::vector<std::pair<std::vector<int>, std::vector<int>>> sample_bilingual(
    int n, Generator& gen, nn::BilingualModel& model, int dec_max_len, Rng& rng);

} // namespace bitext::gan
