#include "bitext/nn.hpp"

#include <cmath>

namespace bitext::nn {

Param& ParamSet::add(std::string name, Tensor init, bool trainable) {
    for (const Param& p : params_)
        if (p.name == name) throw TensorError("param set: duplicate name " + name);
    params_.push_back(Param{std::move(name), std::move(init), trainable});
    return params_.back();
}

Param* ParamSet::find(const std::string& name) {
    for (Param& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

void GradStore::add(Param& p, const Tensor& g, double scale) {
    auto it = grads_.find(&p);
    if (it == grads_.end()) {
        Tensor t = g;
        if (scale != 1.0)
            for (double& x : t.data) x *= scale;
        grads_.emplace(&p, std::move(t));
        return;
    }
    Tensor& acc = it->second;
    for (int64_t i = 0; i < acc.numel(); ++i) acc.data[i] += scale * g.data[i];
}

const Tensor* GradStore::find(const Param& p) const {
    auto it = grads_.find(&p);
    return it == grads_.end() ? nullptr : &it->second;
}

void GradStore::merge_from(const GradStore& other, ParamSet& params) {
    for (Param& p : params) {
        const Tensor* g = other.find(p);
        if (g) add(p, *g, 1.0);
    }
}

ad::Var Binding::operator()(Param& p) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return it->second;
    ad::Var v = g_->leaf(p.value, with_grads_ && p.trainable);
    bound_.emplace(&p, v);
    order_.push_back(&p);
    return v;
}

void Binding::accumulate(const ad::GradMap& gm, GradStore& store, double scale) {
    for (Param* p : order_) {
        ad::Var leaf = bound_.at(p);
        if (!gm.has(leaf)) continue;
        store.add(*p, gm.grad(leaf), scale);
    }
}

Tensor init_weight(std::vector<int> shape, Rng& rng) {
    return Tensor::uniform(std::move(shape), -0.08, 0.08, rng);
}

LstmParams LstmParams::create(ParamSet& ps, const std::string& prefix, int input_size, int hidden_size,
                              Rng& rng) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const std::vector<int> wshape{input_size + hidden_size, hidden_size};
    p.wi = &ps.add(prefix + ".wi", init_weight(wshape, rng));
    p.wf = &ps.add(prefix + ".wf", init_weight(wshape, rng));
    p.wg = &ps.add(prefix + ".wg", init_weight(wshape, rng));
    p.wo = &ps.add(prefix + ".wo", init_weight(wshape, rng));
    p.bi = &ps.add(prefix + ".bi", Tensor::zeros({1, hidden_size}));
    p.bf = &ps.add(prefix + ".bf", Tensor::full({1, hidden_size}, 1.0));
    p.bg = &ps.add(prefix + ".bg", Tensor::zeros({1, hidden_size}));
    p.bo = &ps.add(prefix + ".bo", Tensor::zeros({1, hidden_size}));
    return p;
}

LstmState lstm_zero_state(ad::Graph& g, int hidden_size) {
    return {g.constant(Tensor::zeros({1, hidden_size})), g.constant(Tensor::zeros({1, hidden_size}))};
}

LstmState lstm_step(ad::Graph& g, Binding& bind, ad::Var x, const LstmState& prev, const LstmParams& p) {
    using namespace ad;
    Var z = concat({x, prev.h}, 1);
    Var i = sigmoid(add(matmul(z, bind(*p.wi)), bind(*p.bi)));
    Var f = sigmoid(add(matmul(z, bind(*p.wf)), bind(*p.bf)));
    Var gt = ad::tanh(add(matmul(z, bind(*p.wg)), bind(*p.bg)));
    Var o = sigmoid(add(matmul(z, bind(*p.wo)), bind(*p.bo)));
    Var c = add(mul(f, prev.c), mul(i, gt));
    Var h = mul(o, ad::tanh(c));
    return {h, c};
}

void Adam::step(ParamSet& params, const GradStore& grads) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (Param& p : params) {
        if (!p.trainable) continue;
        const Tensor* g = grads.find(p);
        if (!g) continue;
        auto& [m, v] = moments_[&p];
        if (m.numel() == 0) {
            m = Tensor::zeros(p.value.shape);
            v = Tensor::zeros(p.value.shape);
        }
        if (!g->same_shape(p.value))
            throw TensorError("adam: gradient shape " + g->shape_str() + " for param " + p.name + " " +
                              p.value.shape_str());
        for (int64_t i = 0; i < p.value.numel(); ++i) {
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g->data[i];
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g->data[i] * g->data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void RmsProp::step(ParamSet& params, const GradStore& grads) {
    ++step_;
    for (Param& p : params) {
        if (!p.trainable) continue;
        const Tensor* g = grads.find(p);
        if (!g) continue;
        Tensor& ms = mean_square_[&p];
        if (ms.numel() == 0) ms = Tensor::zeros(p.value.shape);
        if (!g->same_shape(p.value))
            throw TensorError("rmsprop: gradient shape " + g->shape_str() + " for param " + p.name + " " +
                              p.value.shape_str());
        for (int64_t i = 0; i < p.value.numel(); ++i) {
            ms.data[i] = cfg_.decay * ms.data[i] + (1.0 - cfg_.decay) * g->data[i] * g->data[i];
            p.value.data[i] -= cfg_.lr * g->data[i] / (std::sqrt(ms.data[i]) + cfg_.eps);
        }
    }
}

} // namespace bitext::nn
