#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/llm/backend.hpp"

namespace evorag::llm {

// One scripted record. All `contains` substrings must appear in the rendered
// prompt; `pattern`, when set, must additionally be found (ECMAScript regex).
struct ScriptEntry {
    std::vector<std::string> contains;
    std::string pattern;
    std::string response;

    bool matches(const std::string& prompt) const {
        for (const auto& needle : contains)
            if (prompt.find(needle) == std::string::npos) return false;
        if (!pattern.empty()) {
            std::regex re(pattern, std::regex::ECMAScript);
            if (!std::regex_search(prompt, re)) return false;
        }
        return true;
    }
};

// Ordered lookup table: the first matching entry wins, deterministically.
struct ScriptedBackendTable {
    std::vector<ScriptEntry> entries;
    std::string default_response = "Unknown";

    const std::string& lookup(const std::string& prompt) const {
        for (const auto& e : entries)
            if (e.matches(prompt)) return e.response;
        return default_response;
    }
};

// Script file format: blocks separated by `---` lines. A block holds zero or
// more `MATCH:` lines (conjunctive substrings), optionally one `REGEX:` line,
// then a `RESPONSE:` line; further lines until the separator continue the
// response. A `DEFAULT:` block overrides the table-wide default ("Unknown").
// Lines starting with `#` outside a response body are comments.
inline ScriptedBackendTable load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScriptParseError(0, "cannot open script file: " + path);

    ScriptedBackendTable table;
    ScriptEntry current;
    bool in_response = false;
    bool in_default = false;
    bool block_has_content = false;
    std::string* body = nullptr;
    std::string default_body;

    auto value_after = [](const std::string& line, std::size_t prefix_len) {
        std::string v = line.substr(prefix_len);
        if (!v.empty() && v.front() == ' ') v.erase(v.begin());
        return v;
    };

    auto flush_block = [&](std::size_t line_no) {
        if (!block_has_content) return;
        if (in_default) {
            table.default_response = default_body;
        } else {
            if (!in_response)
                throw ScriptParseError(line_no, "block has no RESPONSE line");
            table.entries.push_back(current);
        }
        current = ScriptEntry{};
        default_body.clear();
        in_response = in_default = block_has_content = false;
        body = nullptr;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        if (line == "---") {
            flush_block(line_no);
            continue;
        }
        if (in_response) {
            *body += '\n';
            *body += line;
            continue;
        }
        if (line.empty() || line.front() == '#') continue;

        if (line.rfind("MATCH:", 0) == 0) {
            current.contains.push_back(value_after(line, 6));
            block_has_content = true;
        } else if (line.rfind("REGEX:", 0) == 0) {
            current.pattern = value_after(line, 6);
            block_has_content = true;
        } else if (line.rfind("RESPONSE:", 0) == 0) {
            current.response = value_after(line, 9);
            in_response = true;
            block_has_content = true;
            body = &current.response;
        } else if (line.rfind("DEFAULT:", 0) == 0) {
            default_body = value_after(line, 8);
            in_response = in_default = true;
            block_has_content = true;
            body = &default_body;
        } else {
            throw ScriptParseError(line_no, "unrecognized directive: " + line);
        }
    }
    flush_block(line_no + 1);
    return table;
}

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

// Deterministic backend driven by a ScriptedBackendTable. Completions are a
// pure function of (table, rendered prompt); embeddings hash the token
// multiset into d dimensions and normalize to unit length, so identical texts
// always embed identically while unrelated texts land elsewhere on the sphere.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(ScriptedBackendTable table, std::size_t dim = 1024,
                             std::uint64_t seed = 0)
        : table_(std::move(table)), dim_(dim), seed_(seed) {}

    std::string complete(const ChatRequest& request) override {
        request.validate();
        std::string prompt = request.rendered();
        {
            std::lock_guard<std::mutex> lock(log_mutex_);
            prompt_log_.push_back(prompt);
        }
        complete_calls_.fetch_add(1, std::memory_order_relaxed);
        std::string out = strip_trailing_whitespace(table_.lookup(prompt));
        if (out.empty()) throw EmptyCompletion();
        return out;
    }

    EmbeddingVector embed(const std::string& text) override {
        std::string collapsed;
        for (char c : text)
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') collapsed.push_back(c);
        if (collapsed.empty())
            throw std::invalid_argument("embed: text empty after whitespace collapse");
        embed_calls_.fetch_add(1, std::memory_order_relaxed);

        // accumulate in sorted token order so the multiset alone determines
        // the vector (fp addition is order-sensitive)
        std::vector<std::string> tokens;
        std::istringstream iss(text);
        std::string token;
        while (iss >> token) tokens.push_back(token);
        std::sort(tokens.begin(), tokens.end());

        EmbeddingVector out;
        out.values.assign(dim_, 0.0);
        for (const auto& t : tokens) {
            std::uint64_t h = detail::fnv1a64(t) ^ detail::splitmix64(seed_);
            for (std::size_t j = 0; j < dim_; ++j) {
                std::uint64_t r = detail::splitmix64(h + 0x632be59bd9b4e019ull * (j + 1));
                // map to [-1, 1)
                out.values[j] += static_cast<double>(static_cast<std::int64_t>(r)) /
                                 9223372036854775808.0;
            }
        }
        double norm = out.norm();
        if (norm == 0.0) {
            out.values[0] = 1.0;
            norm = 1.0;
        }
        for (double& v : out.values) v /= norm;
        return out;
    }

    std::size_t embedding_dim() const override { return dim_; }

    // Call-count instrumentation for tests.
    int complete_calls() const { return complete_calls_.load(std::memory_order_relaxed); }
    int embed_calls() const { return embed_calls_.load(std::memory_order_relaxed); }

    std::vector<std::string> prompt_log() const {
        std::lock_guard<std::mutex> lock(log_mutex_);
        return prompt_log_;
    }

private:
    ScriptedBackendTable table_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::atomic<int> complete_calls_{0};
    std::atomic<int> embed_calls_{0};
    mutable std::mutex log_mutex_;
    std::vector<std::string> prompt_log_;
};

} // namespace evorag::llm
