#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bitext/nn.hpp"

namespace bitext::ckpt {

constexpr uint32_t kVersion = 1;

// Versioned binary container of named tensors plus the run configuration and
// RNG state. Round-trips are bit-exact; loading a different version or a
// tensor of a different shape is an error.
struct Checkpoint {
    uint32_t version = kVersion;
    std::string config_json;
    int64_t epoch = 0;
    uint64_t rng_seed = 0;
    uint64_t rng_counter = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void add_params(const std::string& prefix, const nn::ParamSet& params);
    void load_into(const std::string& prefix, nn::ParamSet& params) const;
    bool has_tensor(const std::string& name) const;
    const Tensor* find(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace bitext::ckpt
