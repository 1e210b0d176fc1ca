#include "bitext/gan.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bitext::gan {

using ad::Var;

void GanConfig::validate() const {
    if (lambda <= 0.0) throw std::invalid_argument("gan config: lambda must be positive");
    if (critic_per_gen < 1) throw std::invalid_argument("gan config: critic_per_gen must be >= 1");
    if (noise_dim < 1 || max_len < 1 || batch_size < 1)
        throw std::invalid_argument("gan config: bad dimensions");
}

namespace {

constexpr int kBlocks = 5;
constexpr int kKernelWidth = 3;

std::vector<nn::Param*> make_conv_stack(nn::ParamSet& ps, const std::string& prefix, int depth, Rng& rng,
                                        std::vector<nn::Param*>& biases) {
    std::vector<nn::Param*> weights;
    for (int b = 0; b < kBlocks; ++b) {
        weights.push_back(
            &ps.add(prefix + ".conv" + std::to_string(b) + ".w", nn::init_weight({kKernelWidth, depth, depth}, rng)));
        biases.push_back(&ps.add(prefix + ".conv" + std::to_string(b) + ".b", Tensor::zeros({1, depth})));
    }
    return weights;
}

// pre-activation residual block: x + conv(relu(x)) + b
Var res_block(ad::Graph& g, nn::Binding& bind, Var x, nn::Param& w, nn::Param& b) {
    return ad::add(x, ad::add(ad::conv1d(ad::relu(x), bind(w)), bind(b)));
}

} // namespace

Generator::Generator(const GanConfig& cfg, int code_depth, Rng& rng)
    : depth_(code_depth), max_len_(cfg.max_len), noise_dim_(cfg.noise_dim) {
    Rng init = rng.stream(0x6E6);
    lin_w_ = &params_.add("gen.lin.w", nn::init_weight({noise_dim_, max_len_ * depth_}, init));
    lin_b_ = &params_.add("gen.lin.b", Tensor::zeros({1, max_len_ * depth_}));
    conv_w_ = make_conv_stack(params_, "gen", depth_, init, conv_b_);
}

Var Generator::build(ad::Graph& g, nn::Binding& bind, Var noise_row) {
    Var up = ad::add(ad::matmul(noise_row, bind(*lin_w_)), bind(*lin_b_));
    Var x = ad::reshape(up, {max_len_, depth_});
    for (int b = 0; b < kBlocks; ++b) x = res_block(g, bind, x, *conv_w_[b], *conv_b_[b]);
    return ad::tanh(x);
}

Tensor Generator::generate(const Tensor& noise_row) {
    ad::Graph g;
    nn::Binding bind(g, false);
    return g.value(build(g, bind, g.constant(noise_row)));
}

Critic::Critic(const GanConfig& cfg, int code_depth, Rng& rng) : depth_(code_depth), max_len_(cfg.max_len) {
    Rng init = rng.stream(0xC217);
    conv_w_ = make_conv_stack(params_, "critic", depth_, init, conv_b_);
    head_w_ = &params_.add("critic.head.w", nn::init_weight({max_len_ * depth_, 1}, init));
    head_b_ = &params_.add("critic.head.b", Tensor::zeros({1, 1}));
}

Var Critic::score(ad::Graph& g, nn::Binding& bind, Var code) {
    // plain conv stack: residual connections are a generator-side feature
    Var x = code;
    for (int b = 0; b < kBlocks; ++b)
        x = ad::relu(ad::add(ad::conv1d(x, bind(*conv_w_[b])), bind(*conv_b_[b])));
    Var flat = ad::reshape(x, {1, max_len_ * depth_});
    return ad::sum(ad::add(ad::matmul(flat, bind(*head_w_)), bind(*head_b_)));
}

Tensor real_code(nn::BilingualModel& model, const std::vector<int>& tokens_with_eos, int lang, int max_len) {
    if (static_cast<int>(tokens_with_eos.size()) > max_len)
        throw std::invalid_argument("real_code: sequence of " + std::to_string(tokens_with_eos.size()) +
                                    " tokens exceeds max_len " + std::to_string(max_len));
    ad::Graph g;
    nn::Binding bind(g, false);
    const Tensor& code = g.value(model.encode(g, bind, tokens_with_eos, lang));
    Tensor padded({max_len, code.shape[1]});
    std::copy(code.data.begin(), code.data.end(), padded.data.begin());
    return padded;
}

Var gradient_penalty(ad::Graph& g, nn::Binding& bind, Critic& critic, const Tensor& real,
                     const Tensor& fake, Rng& rng) {
    if (!real.same_shape(fake))
        throw std::invalid_argument("gradient_penalty: real " + real.shape_str() + " vs fake " +
                                    fake.shape_str());
    const double alpha = rng.uniform();
    Tensor interp = real;
    for (int64_t i = 0; i < interp.numel(); ++i)
        interp.data[i] = alpha * real.data[i] + (1.0 - alpha) * fake.data[i];

    Var c_bar = g.leaf(std::move(interp), /*requires_grad=*/true);
    Var score = critic.score(g, bind, c_bar);
    Var norm = g.grad_norm(score, c_bar);
    Var excess = ad::sub(norm, g.constant_scalar(1.0));
    return ad::mul(excess, excess);
}

GanTrainer::GanTrainer(GanConfig cfg, nn::BilingualModel& frozen_model, Rng& rng)
    : cfg_(cfg), model_(&frozen_model), rng_(rng.stream(0x9A4)) {
    cfg_.validate();
    gen_ = std::make_unique<Generator>(cfg_, frozen_model.code_depth(), rng_);
    critic_ = std::make_unique<Critic>(cfg_, frozen_model.code_depth(), rng_);
    gen_opt_ = std::make_unique<nn::Adam>(nn::AdamConfig{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8});
    critic_opt_ = std::make_unique<nn::Adam>(nn::AdamConfig{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8});
}

Tensor GanTrainer::sample_noise() {
    Tensor z({1, cfg_.noise_dim});
    for (double& v : z.data) v = rng_.normal();
    return z;
}

double GanTrainer::critic_update(const std::vector<Tensor>& real0, const std::vector<Tensor>& real1,
                                 double& wasserstein, double& penalty) {
    const size_t batch = std::min(real0.size(), real1.size());
    if (batch == 0) throw std::invalid_argument("gan step: empty real-code batch");

    // one fake code per pair, scored against both languages' real codes
    std::vector<Tensor> fakes(batch);
    for (size_t i = 0; i < batch; ++i) fakes[i] = gen_->generate(sample_noise());

    nn::GradStore grads;
    double loss_total = 0, w_total = 0, gp_total = 0;
    const double scale = 1.0 / static_cast<double>(2 * batch);
    for (int lang = 0; lang < 2; ++lang) {
        const auto& reals = lang == 0 ? real0 : real1;
        for (size_t i = 0; i < batch; ++i) {
            ad::Graph g;
            nn::Binding bind(g);
            Var d_real = critic_->score(g, bind, g.constant(reals[i]));
            Var d_fake = critic_->score(g, bind, g.constant(fakes[i]));
            Var gp = gradient_penalty(g, bind, *critic_, reals[i], fakes[i], rng_);
            Var loss = ad::add(ad::sub(d_fake, d_real), ad::scalar_mul(gp, cfg_.lambda));
            bind.accumulate(g.backward(loss), grads, scale);
            loss_total += g.value(loss).scalar() * scale;
            w_total += (g.value(d_real).scalar() - g.value(d_fake).scalar()) * scale;
            gp_total += g.value(gp).scalar() * scale;
        }
    }
    if (!std::isfinite(loss_total)) throw std::runtime_error("gan: non-finite critic loss; diverged");
    critic_opt_->step(critic_->params(), grads);
    wasserstein = w_total;
    penalty = gp_total;
    return loss_total;
}

double GanTrainer::generator_update(size_t batch) {
    nn::GradStore grads;
    double loss_total = 0;
    const double scale = 1.0 / static_cast<double>(batch);
    for (size_t i = 0; i < batch; ++i) {
        ad::Graph g;
        nn::Binding gen_bind(g);
        nn::Binding critic_bind(g, false); // critic frozen for this step
        Var fake = gen_->build(g, gen_bind, g.leaf(sample_noise(), false));
        Var loss = ad::scalar_mul(critic_->score(g, critic_bind, fake), -1.0);
        gen_bind.accumulate(g.backward(loss), grads, scale);
        loss_total += g.value(loss).scalar() * scale;
    }
    if (!std::isfinite(loss_total)) throw std::runtime_error("gan: non-finite generator loss; diverged");
    gen_opt_->step(gen_->params(), grads);
    return loss_total;
}

StepLosses GanTrainer::step(const std::vector<Tensor>& real0, const std::vector<Tensor>& real1) {
    StepLosses out;
    for (int k = 0; k < cfg_.critic_per_gen; ++k)
        out.critic_loss = critic_update(real0, real1, out.wasserstein, out.grad_penalty);
    out.gen_loss = generator_update(std::min(real0.size(), real1.size()));
    return out;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> sample_bilingual(
    int n, Generator& gen, nn::BilingualModel& model, int dec_max_len, Rng& rng) {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
    out.reserve(static_cast<size_t>(std::max(0, n)));
    for (int i = 0; i < n; ++i) {
        Tensor z({1, gen.noise_dim()});
        for (double& v : z.data) v = rng.normal();
        Tensor code = gen.generate(z);
        ad::Graph g;
        nn::Binding bind(g, false);
        Var code_var = g.constant(code);
        std::vector<int> s0 = model.decode_greedy(g, bind, code_var, 0, dec_max_len);
        std::vector<int> s1 = model.decode_greedy(g, bind, code_var, 1, dec_max_len);
        out.emplace_back(std::move(s0), std::move(s1));
    }
    return out;
}

} // namespace bitext::gan
