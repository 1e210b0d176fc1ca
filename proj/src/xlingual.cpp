#include "bitext/xlingual.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bitext::xling {

EmbeddingTable load_embeddings(const std::string& path, const text::Vocabulary& vocab, Rng& rng,
                               bool trainable) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("embeddings: cannot read " + path);

    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("embeddings: empty file " + path);
    std::istringstream hs(header);
    int64_t count = 0;
    int dim = 0;
    if (!(hs >> count >> dim)) throw std::runtime_error("embeddings: bad header in " + path);
    if (dim != kEmbeddingDim)
        throw std::runtime_error("embeddings: dimension " + std::to_string(dim) + " in " + path +
                                 ", expected " + std::to_string(kEmbeddingDim));

    EmbeddingTable table;
    table.vocab = &vocab;
    table.trainable = trainable;
    table.matrix = Tensor::uniform({vocab.size(), kEmbeddingDim}, -0.08, 0.08, rng);

    std::vector<char> found(static_cast<size_t>(vocab.size()), 0);
    std::string line;
    int64_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        const int id = vocab.id(word);
        const bool wanted = id != text::kUnk && vocab.contains(word);
        double v;
        int got = 0;
        while (ls >> v) {
            if (got < kEmbeddingDim && wanted) table.matrix.at(id, got) = v;
            ++got;
        }
        if (got != kEmbeddingDim)
            throw std::runtime_error("embeddings: line " + std::to_string(line_no) + " of " + path +
                                     " has " + std::to_string(got) + " values, expected " +
                                     std::to_string(kEmbeddingDim));
        if (wanted) found[static_cast<size_t>(id)] = 1;
    }

    const int content = vocab.size() - text::kNumReserved;
    int hits = 0;
    for (int i = text::kNumReserved; i < vocab.size(); ++i) hits += found[static_cast<size_t>(i)];
    table.coverage = content > 0 ? static_cast<double>(hits) / content : 0.0;
    return table;
}

WbwTable build_wbw_table(const EmbeddingTable& src, const EmbeddingTable& tgt) {
    if (src.matrix.shape[1] != kEmbeddingDim || tgt.matrix.shape[1] != kEmbeddingDim)
        throw std::runtime_error("wbw: embedding tables must have dimension 300");
    const int src_n = src.matrix.shape[0];
    const int tgt_n = tgt.matrix.shape[0];

    std::vector<double> tgt_norm(static_cast<size_t>(tgt_n), 0.0);
    for (int j = 0; j < tgt_n; ++j) {
        double s = 0.0;
        for (int d = 0; d < kEmbeddingDim; ++d) s += tgt.matrix.at(j, d) * tgt.matrix.at(j, d);
        tgt_norm[static_cast<size_t>(j)] = std::sqrt(s);
    }

    WbwTable table;
    table.map.assign(static_cast<size_t>(src_n), text::kUnk);
    for (int i = 0; i < text::kNumReserved; ++i) table.map[static_cast<size_t>(i)] = i;

    int zero_norm = 0;
#pragma omp parallel for schedule(static) reduction(+ : zero_norm)
    for (int i = text::kNumReserved; i < src_n; ++i) {
        double sn = 0.0;
        for (int d = 0; d < kEmbeddingDim; ++d) sn += src.matrix.at(i, d) * src.matrix.at(i, d);
        sn = std::sqrt(sn);
        if (sn == 0.0) {
            ++zero_norm;
            continue; // stays UNK
        }
        int best = text::kUnk;
        double best_cos = -2.0;
        for (int j = text::kNumReserved; j < tgt_n; ++j) {
            if (tgt_norm[static_cast<size_t>(j)] == 0.0) continue;
            double dot = 0.0;
            for (int d = 0; d < kEmbeddingDim; ++d) dot += src.matrix.at(i, d) * tgt.matrix.at(j, d);
            const double cos = dot / (sn * tgt_norm[static_cast<size_t>(j)]);
            if (cos > best_cos) {
                best_cos = cos;
                best = j;
            }
        }
        table.map[static_cast<size_t>(i)] = best;
    }
    table.zero_norm_sources = zero_norm;
    if (zero_norm > 0)
        std::fprintf(stderr, "wbw: %d zero-norm source vectors mapped to <unk>\n", zero_norm);
    return table;
}

text::TokenSeq translate_wbw(const text::TokenSeq& seq, const WbwTable& table) {
    text::TokenSeq out;
    out.lang = 1 - seq.lang;
    out.ids.reserve(seq.ids.size());
    for (int id : seq.ids) {
        if (id < 0 || id >= static_cast<int>(table.map.size()))
            throw std::runtime_error("wbw: id " + std::to_string(id) + " outside table");
        out.ids.push_back(table.map[static_cast<size_t>(id)]);
    }
    return out;
}

} // namespace bitext::xling
