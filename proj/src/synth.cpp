#include "bitext/synth.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace bitext::synth {

namespace {

struct WordClasses {
    // index ranges [begin, end) into the content vocabulary
    std::pair<int, int> det, adj, noun, verb, adv;
};

WordClasses classes_for(int vocab_size) {
    if (vocab_size < 10) throw std::invalid_argument("cipher: vocab_size must be at least 10");
    const int d = std::max(2, vocab_size * 12 / 100);
    const int a = std::max(2, vocab_size * 18 / 100);
    const int n = std::max(3, vocab_size * 32 / 100);
    const int v = std::max(2, vocab_size * 24 / 100);
    WordClasses c;
    c.det = {0, d};
    c.adj = {d, d + a};
    c.noun = {d + a, d + a + n};
    c.verb = {d + a + n, d + a + n + v};
    c.adv = {d + a + n + v, vocab_size};
    if (c.adv.first >= c.adv.second) throw std::invalid_argument("cipher: vocab too small for class split");
    return c;
}

enum class Wc { Det, Adj, Noun, Verb, Adv };

const std::vector<std::vector<Wc>>& templates() {
    static const std::vector<std::vector<Wc>> t = {
        {Wc::Det, Wc::Noun, Wc::Verb},
        {Wc::Noun, Wc::Verb, Wc::Adv},
        {Wc::Det, Wc::Noun, Wc::Verb, Wc::Adv},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Verb},
        {Wc::Det, Wc::Noun, Wc::Verb, Wc::Det, Wc::Noun},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Verb, Wc::Adv},
        {Wc::Det, Wc::Noun, Wc::Verb, Wc::Det, Wc::Adj, Wc::Noun},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Verb, Wc::Det, Wc::Noun},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Verb, Wc::Det, Wc::Noun, Wc::Adv},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Verb, Wc::Det, Wc::Adj, Wc::Noun},
        {Wc::Det, Wc::Adj, Wc::Noun, Wc::Adv, Wc::Verb, Wc::Det, Wc::Adj, Wc::Noun},
        {Wc::Det, Wc::Adj, Wc::Adj, Wc::Noun, Wc::Verb, Wc::Det, Wc::Adj, Wc::Noun},
    };
    return t;
}

void swap_adjacent(std::vector<std::string>& toks) {
    for (size_t i = 0; i + 1 < toks.size(); i += 2) std::swap(toks[i], toks[i + 1]);
}

// parses "s17"/"t17" style words; returns -1 for anything else
int word_index(const std::string& tok, char prefix, int vocab_size) {
    if (tok.size() < 2 || tok[0] != prefix) return -1;
    int idx = 0;
    for (size_t i = 1; i < tok.size(); ++i) {
        if (tok[i] < '0' || tok[i] > '9') return -1;
        idx = idx * 10 + (tok[i] - '0');
    }
    return idx < vocab_size ? idx : -1;
}

} // namespace

CipherSpec CipherSpec::make(int vocab_size, int min_len, int max_len, uint64_t seed) {
    if (min_len < 3 || max_len > 8 || min_len > max_len)
        throw std::invalid_argument("cipher: supported sentence lengths are 3..8");
    CipherSpec spec;
    spec.vocab_size = vocab_size;
    spec.min_len = min_len;
    spec.max_len = max_len;
    spec.seed = seed;
    classes_for(vocab_size); // validates the size

    spec.perm.resize(static_cast<size_t>(vocab_size));
    for (int i = 0; i < vocab_size; ++i) spec.perm[static_cast<size_t>(i)] = i;
    Rng rng = Rng(seed).stream(0xC1FE);
    for (int i = vocab_size - 1; i > 0; --i)
        std::swap(spec.perm[static_cast<size_t>(i)], spec.perm[rng.below(static_cast<uint64_t>(i + 1))]);
    spec.inv_perm.resize(static_cast<size_t>(vocab_size));
    for (int i = 0; i < vocab_size; ++i) spec.inv_perm[static_cast<size_t>(spec.perm[static_cast<size_t>(i)])] = i;
    return spec;
}

std::vector<std::string> CipherSpec::oracle_translate(const std::vector<std::string>& source_tokens) const {
    std::vector<std::string> out;
    out.reserve(source_tokens.size());
    for (const auto& tok : source_tokens) {
        const int idx = word_index(tok, 's', vocab_size);
        out.push_back(idx < 0 ? tok : target_word(perm[static_cast<size_t>(idx)]));
    }
    swap_adjacent(out);
    return out;
}

std::vector<std::string> CipherSpec::oracle_back_translate(const std::vector<std::string>& target_tokens) const {
    std::vector<std::string> toks = target_tokens;
    swap_adjacent(toks);
    for (auto& tok : toks) {
        const int idx = word_index(tok, 't', vocab_size);
        if (idx >= 0) tok = source_word(inv_perm[static_cast<size_t>(idx)]);
    }
    return toks;
}

void CipherSpec::save(const std::string& path) const {
    nlohmann::json j;
    j["vocab_size"] = vocab_size;
    j["min_len"] = min_len;
    j["max_len"] = max_len;
    j["seed"] = seed;
    j["perm"] = perm;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cipher: cannot write " + path);
    f << j.dump(2) << '\n';
}

CipherSpec CipherSpec::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cipher: cannot read " + path);
    nlohmann::json j;
    f >> j;
    CipherSpec spec;
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.min_len = j.at("min_len").get<int>();
    spec.max_len = j.at("max_len").get<int>();
    spec.seed = j.at("seed").get<uint64_t>();
    spec.perm = j.at("perm").get<std::vector<int>>();
    if (static_cast<int>(spec.perm.size()) != spec.vocab_size)
        throw std::runtime_error("cipher: malformed permutation in " + path);
    spec.inv_perm.resize(spec.perm.size());
    for (int i = 0; i < spec.vocab_size; ++i)
        spec.inv_perm[static_cast<size_t>(spec.perm[static_cast<size_t>(i)])] = i;
    return spec;
}

std::vector<SentencePair> make_corpus(const CipherSpec& spec, int n, uint64_t seed) {
    const WordClasses classes = classes_for(spec.vocab_size);
    std::vector<const std::vector<Wc>*> usable;
    for (const auto& t : templates())
        if (static_cast<int>(t.size()) >= spec.min_len && static_cast<int>(t.size()) <= spec.max_len)
            usable.push_back(&t);
    if (usable.empty()) throw std::invalid_argument("cipher: no template fits the length range");

    auto pick = [](std::pair<int, int> range, Rng& rng) {
        return range.first + static_cast<int>(rng.below(static_cast<uint64_t>(range.second - range.first)));
    };

    std::vector<SentencePair> pairs;
    pairs.reserve(static_cast<size_t>(n));
    Rng base = Rng(spec.seed).stream(seed);
    for (int i = 0; i < n; ++i) {
        Rng rng = base.stream(static_cast<uint64_t>(i));
        const auto& tmpl = *usable[rng.below(usable.size())];
        std::vector<std::string> src;
        src.reserve(tmpl.size());
        for (Wc c : tmpl) {
            std::pair<int, int> range;
            switch (c) {
                case Wc::Det: range = classes.det; break;
                case Wc::Adj: range = classes.adj; break;
                case Wc::Noun: range = classes.noun; break;
                case Wc::Verb: range = classes.verb; break;
                case Wc::Adv: range = classes.adv; break;
            }
            src.push_back(spec.source_word(pick(range, rng)));
        }
        pairs.emplace_back(src, spec.oracle_translate(src));
    }
    return pairs;
}

DisjointSplit disjoint_split(const std::vector<SentencePair>& pairs) {
    DisjointSplit split;
    const size_t half = pairs.size() / 2;
    for (size_t i = 0; i < half; ++i) split.mono0.push_back(pairs[i].first);
    for (size_t i = half; i < pairs.size(); ++i) split.mono1.push_back(pairs[i].second);
    return split;
}

namespace {

double token_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    std::map<std::string, int> ca;
    for (const auto& t : a) ++ca[t];
    int overlap = 0;
    for (const auto& t : b) {
        auto it = ca.find(t);
        if (it != ca.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return 2.0 * overlap / static_cast<double>(a.size() + b.size());
}

} // namespace

double parallelism_score(const std::vector<std::vector<std::string>>& l0,
                         const std::vector<std::vector<std::string>>& l1, const CipherSpec& spec) {
    if (l0.size() != l1.size()) throw std::invalid_argument("parallelism: unpaired corpora");
    if (l0.empty()) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < l0.size(); ++i) total += token_f1(spec.oracle_translate(l0[i]), l1[i]);
    return total / static_cast<double>(l0.size());
}

void write_cipher_embeddings(const CipherSpec& spec, const std::string& path_l0,
                             const std::string& path_l1, double noise_scale, uint64_t seed) {
    if (spec.vocab_size > 300)
        throw std::invalid_argument("cipher embeddings: vocab_size must be <= 300 for one-hot rows");
    Rng rng = Rng(seed).stream(0xE3B);

    auto write = [&](const std::string& path, bool target) {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cipher embeddings: cannot write " + path);
        f << spec.vocab_size << " 300\n";
        for (int w = 0; w < spec.vocab_size; ++w) {
            // target word perm[i] shares source word i's base vector, so the
            // nearest neighbor recovers the bijection
            const int base = target ? spec.inv_perm[static_cast<size_t>(w)] : w;
            f << (target ? spec.target_word(w) : spec.source_word(w));
            for (int d = 0; d < 300; ++d) {
                const double v = (d == base ? 1.0 : 0.0) + noise_scale * rng.uniform(-1.0, 1.0);
                f << ' ' << v;
            }
            f << '\n';
        }
    };
    write(path_l0, false);
    write(path_l1, true);
}

} // namespace bitext::synth
