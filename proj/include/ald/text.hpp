#pragma once

// Tokenization and the padded token-sequence type shared by every embedder.

#include <cctype>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ald {

struct TokenSeq {
    std::vector<std::string> tokens;     // lowercased
    std::vector<std::string> raw_tokens; // original case, for capitalization features
    std::vector<bool> padded;            // true at padding positions
    int real_len = 0;

    int size() const { return static_cast<int>(tokens.size()); }
};

namespace detail {

inline bool is_strippable_punct(unsigned char c) {
    return std::ispunct(c) != 0;
}

inline std::string to_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline void emit_token(std::vector<std::string>& raw, const std::string& piece) {
    if (piece.empty()) return;
    // @mentions and #hashtags stay whole
    if (piece[0] == '@' || piece[0] == '#') {
        raw.push_back(piece);
        return;
    }
    size_t begin = 0, end = piece.size();
    while (begin < end && is_strippable_punct(static_cast<unsigned char>(piece[begin]))) ++begin;
    while (end > begin && is_strippable_punct(static_cast<unsigned char>(piece[end - 1]))) --end;
    if (begin == end) { // all punctuation, keep as a single token
        raw.push_back(piece);
        return;
    }
    if (begin > 0) raw.push_back(piece.substr(0, begin));
    raw.push_back(piece.substr(begin, end - begin));
    if (end < piece.size()) raw.push_back(piece.substr(end));
}

} // namespace detail

// Whitespace split with surrounding punctuation separated into its own
// tokens; no padding or truncation.
inline TokenSeq tokenize_full(const std::string& text) {
    std::vector<std::string> raw;
    std::string piece;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            detail::emit_token(raw, piece);
            piece.clear();
        } else {
            piece.push_back(ch);
        }
    }
    detail::emit_token(raw, piece);

    TokenSeq seq;
    seq.raw_tokens = raw;
    seq.tokens.reserve(raw.size());
    for (const std::string& r : raw) seq.tokens.push_back(detail::to_lower(r));
    seq.padded.assign(raw.size(), false);
    seq.real_len = static_cast<int>(raw.size());
    return seq;
}

// Fixed-length variant: truncates from the right, pads with flagged empty
// tokens. Empty text yields a padding-only sequence.
inline TokenSeq tokenize(const std::string& text, int max_len) {
    if (max_len < 1) throw std::invalid_argument("tokenize: max_len must be >= 1");
    TokenSeq seq = tokenize_full(text);
    if (seq.real_len == 0)
        std::cerr << "tokenize: empty text, emitting padding-only sequence\n";
    if (seq.size() > max_len) {
        seq.tokens.resize(max_len);
        seq.raw_tokens.resize(max_len);
        seq.padded.resize(max_len);
        seq.real_len = max_len;
    }
    while (seq.size() < max_len) {
        seq.tokens.emplace_back();
        seq.raw_tokens.emplace_back();
        seq.padded.push_back(true);
    }
    return seq;
}

} // namespace ald
