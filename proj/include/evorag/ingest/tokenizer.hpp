#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace evorag::ingest {

// Byte-offset span of one token within its source text.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<TokenSpan> tokenize(const std::string& text) const = 0;

    std::size_t count_tokens(const std::string& text) const { return tokenize(text).size(); }
};

// Deterministic whitespace-and-punctuation splitter. A token is either a
// maximal run of word bytes (ASCII alphanumerics, '_', or any byte >= 0x80,
// which keeps UTF-8 sequences intact) or a single punctuation byte.
class WordPunctTokenizer final : public Tokenizer {
public:
    std::vector<TokenSpan> tokenize(const std::string& text) const override {
        std::vector<TokenSpan> spans;
        std::size_t i = 0;
        const std::size_t n = text.size();
        while (i < n) {
            unsigned char c = static_cast<unsigned char>(text[i]);
            if (is_space(c)) {
                ++i;
                continue;
            }
            if (is_word_byte(c)) {
                std::size_t j = i + 1;
                while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
                spans.push_back({i, j});
                i = j;
            } else {
                spans.push_back({i, i + 1});
                ++i;
            }
        }
        return spans;
    }

    static bool is_space(unsigned char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }

    static bool is_word_byte(unsigned char c) {
        return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
               c == '_' || c >= 0x80;
    }
};

inline const Tokenizer& default_tokenizer() {
    static WordPunctTokenizer tok;
    return tok;
}

} // namespace evorag::ingest
