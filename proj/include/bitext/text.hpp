#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bitext/rng.hpp"

namespace bitext::text {

// Reserved vocabulary ids, shared by every vocabulary.
constexpr int kPad = 0;
constexpr int kBosL0 = 1;
constexpr int kBosL1 = 2;
constexpr int kEos = 3;
constexpr int kUnk = 4;
constexpr int kNumReserved = 5;

inline int bos_id(int lang) { return lang == 0 ? kBosL0 : kBosL1; }

// Moses-style tokenization, simplified to a hermetic rule set:
//   1. ASCII letters are lowercased; other bytes pass through.
//   2. Runs of letters/digits form words; an interior hyphen stays in the word.
//   3. An apostrophe between letters ends the word after the apostrophe
//      (French elision: "l'union" -> "l'", "union").
//   4. Any other punctuation is split off; runs of the same character stay
//      together ("..." is one token).
std::vector<std::string> tokenize(const std::string& utf8);

class Vocabulary {
public:
    // Most frequent tokens up to max_content entries; ties broken
    // lexicographically. Reserved ids are always present.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, size_t max_content);

    int id(const std::string& token) const; // kUnk when absent
    bool contains(const std::string& token) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    // One content token per line; line number = id - kNumReserved.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    Vocabulary();
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

struct TokenSeq {
    std::vector<int> ids; // content ids; no PAD, trailing kEos optional
    int lang = 0;
};

struct NoiseConfig {
    double p_drop = 0.1;
    int k_shuffle = 3;
    double sigma = 0.3;

    bool valid() const { return p_drop >= 0.0 && p_drop < 1.0 && k_shuffle >= 0 && sigma >= 0.0; }
};

// Word drops and bounded shuffling. Every surviving token keeps its identity;
// if the drops would remove everything, one token is kept uniformly at
// random. A trailing EOS is pinned in place.
TokenSeq apply_noise(const TokenSeq& seq, const NoiseConfig& cfg, Rng& rng);

using TokenizedPair = std::pair<std::vector<std::string>, std::vector<std::string>>;

// Drops pairs with an empty side, a side longer than 20 tokens, or a length
// ratio strictly greater than 1.5.
std::vector<TokenizedPair> filter_pairs(const std::vector<TokenizedPair>& pairs);

struct PaddedBatch {
    std::vector<std::vector<int>> ids;   // each row right-padded to max_len
    std::vector<std::vector<char>> mask; // 1 for real tokens
};

PaddedBatch pad_batch(const std::vector<std::vector<int>>& seqs, int max_len);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

std::string join_tokens(const std::vector<std::string>& tokens);

} // namespace bitext::text
