#pragma once

#include <string>
#include <vector>

#include "bitext/rng.hpp"
#include "bitext/tensor.hpp"
#include "bitext/text.hpp"

namespace bitext::xling {

constexpr int kEmbeddingDim = 300;

struct EmbeddingTable {
    const text::Vocabulary* vocab = nullptr;
    Tensor matrix; // |V| x 300
    bool trainable = true;
    double coverage = 0.0; // fraction of content words found in the file
};

// word2vec text format: header "count dim", then "word v1 ... v300" per line.
// Vocabulary words missing from the file get Uniform(-0.08, 0.08) rows, as do
// the reserved tokens.
EmbeddingTable load_embeddings(const std::string& path, const text::Vocabulary& vocab, Rng& rng,
                               bool trainable = true);

struct WbwTable {
    std::vector<int> map; // source id -> target id; reserved ids map to themselves
    int zero_norm_sources = 0;
};

// Nearest neighbor under cosine similarity over content words; ties go to the
// lower target id, zero-norm sources map to UNK.
WbwTable build_wbw_table(const EmbeddingTable& src, const EmbeddingTable& tgt);

text::TokenSeq translate_wbw(const text::TokenSeq& seq, const WbwTable& table);

} // namespace bitext::xling
