#pragma once

#include <string>

#include "evorag/llm/chat.hpp"

namespace evorag::llm {

// Uniform interface over chat-completion + embedding services. Implementations
// are immutable after construction and safe for concurrent calls; downstream
// modules never know whether they talk to a live endpoint or a script.
class Backend {
public:
    virtual ~Backend() = default;

    // Returns the completion text verbatim, minus trailing whitespace.
    // Throws TransportError on transport failure, EmptyCompletion when the
    // response is blank.
    virtual std::string complete(const ChatRequest& request) = 0;

    // Embeds one text into the configured dimension.
    virtual EmbeddingVector embed(const std::string& text) = 0;

    virtual std::size_t embedding_dim() const = 0;
};

inline std::string strip_trailing_whitespace(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
        s.pop_back();
    return s;
}

} // namespace evorag::llm
