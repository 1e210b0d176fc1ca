#include "bitext/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bitext::ckpt {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'X', 'C'};

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const uint64_t n = get<uint64_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("checkpoint: truncated string");
    return s;
}

} // namespace

void Checkpoint::add_params(const std::string& prefix, const nn::ParamSet& params) {
    for (const nn::Param& p : params) tensors.emplace_back(prefix + p.name, p.value);
}

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

bool Checkpoint::has_tensor(const std::string& name) const { return find(name) != nullptr; }

void Checkpoint::load_into(const std::string& prefix, nn::ParamSet& params) const {
    for (nn::Param& p : params) {
        const Tensor* t = find(prefix + p.name);
        if (!t) throw std::runtime_error("checkpoint: missing tensor " + prefix + p.name);
        if (t->shape != p.value.shape)
            throw std::runtime_error("checkpoint: tensor " + prefix + p.name + " has shape " +
                                     t->shape_str() + ", expected " + p.value.shape_str());
        p.value = *t;
    }
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(kMagic, 4);
    put<uint32_t>(f, version);
    put<int64_t>(f, epoch);
    put<uint64_t>(f, rng_seed);
    put<uint64_t>(f, rng_counter);
    put_string(f, config_json);
    put<uint64_t>(f, tensors.size());
    for (const auto& [name, t] : tensors) {
        put_string(f, name);
        put<uint32_t>(f, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) put<int32_t>(f, d);
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
    Checkpoint c;
    c.version = get<uint32_t>(f);
    if (c.version != kVersion)
        throw std::runtime_error("checkpoint: version " + std::to_string(c.version) + " in " + path +
                                 ", this build reads version " + std::to_string(kVersion));
    c.epoch = get<int64_t>(f);
    c.rng_seed = get<uint64_t>(f);
    c.rng_counter = get<uint64_t>(f);
    c.config_json = get_string(f);
    const uint64_t count = get<uint64_t>(f);
    for (uint64_t i = 0; i < count; ++i) {
        std::string name = get_string(f);
        const uint32_t ndim = get<uint32_t>(f);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) shape[d] = get<int32_t>(f);
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!f) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
        c.tensors.emplace_back(std::move(name), std::move(t));
    }
    return c;
}

} // namespace bitext::ckpt
