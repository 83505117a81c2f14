#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace evorag::llm {

enum class Role { system, user, assistant };

inline const char* role_name(Role r) {
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

struct Message {
    Role role = Role::user;
    std::string text;
};

// One chat-completion call. Temperature defaults to 0 (greedy decoding).
struct ChatRequest {
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 2048;

    void validate() const {
        if (messages.empty())
            throw std::invalid_argument("ChatRequest: messages must be non-empty");
        if (messages.front().role == Role::assistant)
            throw std::invalid_argument("ChatRequest: first message must be system or user");
        if (temperature < 0.0)
            throw std::invalid_argument("ChatRequest: temperature must be >= 0");
        if (max_tokens <= 0)
            throw std::invalid_argument("ChatRequest: max_tokens must be positive");
    }

    // Canonical flat rendering, used by the scripted backend for matching.
    std::string rendered() const {
        std::string out;
        for (const auto& m : messages) {
            out += '[';
            out += role_name(m.role);
            out += "]\n";
            out += m.text;
            out += "\n\n";
        }
        return out;
    }

    static ChatRequest system_user(std::string system_text, std::string user_text) {
        ChatRequest req;
        req.messages.push_back({Role::system, std::move(system_text)});
        req.messages.push_back({Role::user, std::move(user_text)});
        return req;
    }

    static ChatRequest single(std::string user_text) {
        ChatRequest req;
        req.messages.push_back({Role::user, std::move(user_text)});
        return req;
    }
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    double norm() const {
        double acc = 0.0;
        for (double v : values) acc += v * v;
        return std::sqrt(acc);
    }
};

// dot / sqrt(na*nb): identical vectors score exactly 1.0 under
// round-to-nearest, since sqrt(fl(s*s)) == s.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

} // namespace evorag::llm
