#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bitext/rng.hpp"

namespace bitext::synth {

// A deterministic synthetic language pair: target words are a bijection of
// source words, and target word order swaps adjacent pairs at even indices.
// That reorder is an involution, so the oracle is exactly invertible, and it
// makes plain word-by-word translation measurably imperfect.
struct CipherSpec {
    int vocab_size = 50; // content words per language
    int min_len = 3;
    int max_len = 8;
    uint64_t seed = 1;
    std::vector<int> perm;     // source word index -> target word index
    std::vector<int> inv_perm; // inverse bijection

    static CipherSpec make(int vocab_size, int min_len, int max_len, uint64_t seed);

    std::string source_word(int idx) const { return "s" + std::to_string(idx); }
    std::string target_word(int idx) const { return "t" + std::to_string(idx); }

    std::vector<std::string> oracle_translate(const std::vector<std::string>& source_tokens) const;
    std::vector<std::string> oracle_back_translate(const std::vector<std::string>& target_tokens) const;

    void save(const std::string& path) const;
    static CipherSpec load(const std::string& path);
};

using SentencePair = std::pair<std::vector<std::string>, std::vector<std::string>>;

// n aligned pairs from a small subject-verb-object template grammar; pair i
// always satisfies oracle_translate(first) == second.
std::vector<SentencePair> make_corpus(const CipherSpec& spec, int n, uint64_t seed);

// First half of the pairs contributes only source sides, second half only
// target sides: monolingual corpora with no hidden translations.
struct DisjointSplit {
    std::vector<std::vector<std::string>> mono0;
    std::vector<std::vector<std::string>> mono1;
};
DisjointSplit disjoint_split(const std::vector<SentencePair>& pairs);

// Mean token-level F1 between each generated target sentence and the oracle
// translation of its generated source partner.
double parallelism_score(const std::vector<std::vector<std::string>>& l0,
                         const std::vector<std::vector<std::string>>& l1, const CipherSpec& spec);

// One-hot (plus noise) embedding files in word2vec text format, built so that
// nearest-neighbor retrieval recovers the bijection exactly. Requires
// vocab_size <= 300.
void write_cipher_embeddings(const CipherSpec& spec, const std::string& path_l0,
                             const std::string& path_l1, double noise_scale, uint64_t seed);

} // namespace bitext::synth
