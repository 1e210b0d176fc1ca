#include "bitext/text.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace bitext::text {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

// Multi-byte UTF-8 sequences count as word characters.
bool is_word_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

} // namespace

std::vector<std::string> tokenize(const std::string& utf8) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    const size_t n = utf8.size();
    for (size_t i = 0; i < n; ++i) {
        const unsigned char c = static_cast<unsigned char>(utf8[i]);
        if (is_space(c)) {
            flush();
        } else if (is_word_char(c)) {
            word.push_back(lower(c));
        } else if ((c == '\'' || c == 0xe2) && !word.empty() && i + 1 < n) {
            // apostrophe (ASCII or the U+2019 sequence) between letters: keep
            // it on the prefix and start a new word
            size_t next = i + 1;
            if (c == 0xe2) {
                if (i + 3 > n || static_cast<unsigned char>(utf8[i + 1]) != 0x80 ||
                    static_cast<unsigned char>(utf8[i + 2]) != 0x99) {
                    flush();
                    out.push_back(utf8.substr(i, 3));
                    i += 2;
                    continue;
                }
                next = i + 3;
            }
            if (next < n && is_word_char(static_cast<unsigned char>(utf8[next]))) {
                word.push_back('\'');
                flush();
                i = next - 1;
            } else {
                flush();
                out.push_back("'");
                i = next - 1;
            }
        } else if (c == '-' && !word.empty() && i + 1 < n && is_word_char(static_cast<unsigned char>(utf8[i + 1]))) {
            word.push_back('-');
        } else {
            flush();
            // group runs of the same punctuation character
            if (!out.empty() && !out.back().empty() && out.back()[0] == static_cast<char>(c) &&
                !is_word_char(static_cast<unsigned char>(out.back()[0])) && out.back().find_first_not_of(static_cast<char>(c)) == std::string::npos) {
                out.back().push_back(static_cast<char>(c));
            } else {
                out.emplace_back(1, static_cast<char>(c));
            }
        }
    }
    flush();
    return out;
}

Vocabulary::Vocabulary() {
    id_to_token_ = {"<pad>", "<bos0>", "<bos1>", "<eos>", "<unk>"};
    for (int i = 0; i < kNumReserved; ++i) token_to_id_[id_to_token_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, size_t max_content) {
    std::unordered_map<std::string, int64_t> counts;
    for (const auto& sent : corpus)
        for (const auto& tok : sent) ++counts[tok];

    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_content) ranked.resize(max_content);

    Vocabulary v;
    for (const auto& [tok, cnt] : ranked) {
        v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
        v.id_to_token_.push_back(tok);
    }
    return v;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id " + std::to_string(id));
    return id_to_token_[id];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("vocabulary: cannot write " + path);
    for (int i = kNumReserved; i < size(); ++i) f << id_to_token_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("vocabulary: cannot read " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        v.token_to_id_[line] = static_cast<int>(v.id_to_token_.size());
        v.id_to_token_.push_back(line);
    }
    return v;
}

TokenSeq apply_noise(const TokenSeq& seq, const NoiseConfig& cfg, Rng& rng) {
    if (!cfg.valid()) throw std::invalid_argument("apply_noise: invalid noise config");
    TokenSeq out;
    out.lang = seq.lang;

    const bool trailing_eos = !seq.ids.empty() && seq.ids.back() == kEos;
    const size_t content_len = seq.ids.size() - (trailing_eos ? 1 : 0);

    std::vector<int> kept;
    kept.reserve(content_len);
    for (size_t i = 0; i < content_len; ++i) {
        if (rng.uniform() >= cfg.p_drop) kept.push_back(seq.ids[i]);
    }
    if (kept.empty() && content_len > 0)
        kept.push_back(seq.ids[rng.below(content_len)]);

    // Bounded shuffle: sorting on index + U(0, k+1) moves no token more than
    // k positions.
    std::vector<std::pair<double, int>> keyed(kept.size());
    for (size_t i = 0; i < kept.size(); ++i)
        keyed[i] = {static_cast<double>(i) + rng.uniform(0.0, static_cast<double>(cfg.k_shuffle) + 1.0), kept[i]};
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    out.ids.reserve(keyed.size() + (trailing_eos ? 1 : 0));
    for (const auto& [key, tok] : keyed) out.ids.push_back(tok);
    if (trailing_eos) out.ids.push_back(kEos);
    return out;
}

std::vector<TokenizedPair> filter_pairs(const std::vector<TokenizedPair>& pairs) {
    std::vector<TokenizedPair> out;
    for (const auto& p : pairs) {
        const size_t a = p.first.size(), b = p.second.size();
        if (a == 0 || b == 0) continue;
        if (a > 20 || b > 20) continue;
        const double ratio = static_cast<double>(std::max(a, b)) / static_cast<double>(std::min(a, b));
        if (ratio > 1.5) continue;
        out.push_back(p);
    }
    return out;
}

PaddedBatch pad_batch(const std::vector<std::vector<int>>& seqs, int max_len) {
    PaddedBatch b;
    for (const auto& s : seqs) {
        if (static_cast<int>(s.size()) > max_len)
            throw std::invalid_argument("pad_batch: sequence of " + std::to_string(s.size()) +
                                        " tokens exceeds max_len " + std::to_string(max_len));
        std::vector<int> row(max_len, kPad);
        std::vector<char> m(max_len, 0);
        std::copy(s.begin(), s.end(), row.begin());
        std::fill(m.begin(), m.begin() + static_cast<long>(s.size()), 1);
        b.ids.push_back(std::move(row));
        b.mask.push_back(std::move(m));
    }
    return b;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& l : lines) f << l << '\n';
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) s += ' ';
        s += tokens[i];
    }
    return s;
}

} // namespace bitext::text
