#pragma once

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitext/graph.hpp"
#include "bitext/rng.hpp"
#include "bitext/tensor.hpp"

namespace bitext::nn {

// A named trainable tensor that outlives any single graph.
struct Param {
    std::string name;
    Tensor value;
    bool trainable = true;
};

// Ordered parameter registry. Iteration order is the checkpoint layout and
// the gradient accumulation order, so it must be stable.
class ParamSet {
public:
    Param& add(std::string name, Tensor init, bool trainable = true);
    Param* find(const std::string& name);
    size_t size() const { return params_.size(); }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::deque<Param> params_; // deque keeps Param* stable
};

// Gradient accumulator across per-sentence graphs. Sums are applied in call
// order, so callers keep reductions deterministic by accumulating in sentence
// order.
class GradStore {
public:
    void add(Param& p, const Tensor& g, double scale = 1.0);
    const Tensor* find(const Param& p) const;
    void clear() { grads_.clear(); }

    // Fold another store in, visiting parameters in registry order so the
    // floating-point summation order is fixed.
    void merge_from(const GradStore& other, ParamSet& params);

private:
    std::unordered_map<const Param*, Tensor> grads_;
};

// Per-graph binding of parameters to leaf nodes; each Param becomes one leaf
// per graph no matter how often it is used.
class Binding {
public:
    explicit Binding(ad::Graph& g, bool with_grads = true) : g_(&g), with_grads_(with_grads) {}

    ad::Var operator()(Param& p);

    // Fold this graph's leaf gradients into the store (scaled), in the order
    // params were first bound.
    void accumulate(const ad::GradMap& gm, GradStore& store, double scale = 1.0);

private:
    ad::Graph* g_;
    bool with_grads_;
    std::unordered_map<Param*, ad::Var> bound_;
    std::vector<Param*> order_;
};

// Uniform(-0.08, 0.08) weights; the standard recipe here also zeroes biases
// and sets the forget-gate bias to 1.
Tensor init_weight(std::vector<int> shape, Rng& rng);

struct LstmParams {
    int input_size = 0;
    int hidden_size = 0;
    // gate weights are (input_size + hidden_size) x hidden_size
    Param *wi = nullptr, *wf = nullptr, *wg = nullptr, *wo = nullptr;
    Param *bi = nullptr, *bf = nullptr, *bg = nullptr, *bo = nullptr;

    static LstmParams create(ParamSet& ps, const std::string& prefix, int input_size, int hidden_size,
                             Rng& rng);
};

struct LstmState {
    ad::Var h, c; // 1 x hidden each
};

LstmState lstm_zero_state(ad::Graph& g, int hidden_size);
LstmState lstm_step(ad::Graph& g, Binding& bind, ad::Var x, const LstmState& prev, const LstmParams& p);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
    void step(ParamSet& params, const GradStore& grads);
    int64_t steps_taken() const { return step_; }

private:
    AdamConfig cfg_;
    int64_t step_ = 0;
    std::unordered_map<const Param*, std::pair<Tensor, Tensor>> moments_;
};

struct RmsPropConfig {
    double lr = 5e-4;
    double decay = 0.9;
    double eps = 1e-8;
};

class RmsProp {
public:
    explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}
    void step(ParamSet& params, const GradStore& grads);
    int64_t steps_taken() const { return step_; }

private:
    RmsPropConfig cfg_;
    int64_t step_ = 0;
    std::unordered_map<const Param*, Tensor> mean_square_;
};

} // namespace bitext::nn
