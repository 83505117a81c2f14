#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/llm/backend.hpp"

namespace evorag::llm {

struct HttpBackendConfig {
    std::string base_url;   // e.g. "http://localhost:8000/v1"
    std::string api_key;
    std::string chat_model;
    std::string embed_model;
    std::size_t embedding_dim = 1024;
    int retries = 2;             // transport errors only
    int backoff_base_ms = 250;   // doubled per retry
    int timeout_seconds = 120;
    int max_in_flight = 8;
};

namespace detail {

// Portable counting semaphore; caps concurrent requests per backend.
class RequestGate {
public:
    explicit RequestGate(int slots) : slots_(slots) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

struct GateGuard {
    RequestGate& gate;
    explicit GateGuard(RequestGate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
};

} // namespace detail

// Live backend speaking the OpenAI-compatible HTTP surface:
// POST {base_url}/chat/completions and POST {base_url}/embeddings.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config)
        : config_(std::move(config)), gate_(config_.max_in_flight > 0 ? config_.max_in_flight : 1) {
        split_base_url(config_.base_url, origin_, path_prefix_);
    }

    std::string complete(const ChatRequest& request) override {
        request.validate();
        nlohmann::json body;
        body["model"] = config_.chat_model;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        auto& messages = body["messages"] = nlohmann::json::array();
        for (const auto& m : request.messages)
            messages.push_back({{"role", role_name(m.role)}, {"content", m.text}});

        nlohmann::json resp = post_json("/chat/completions", body);
        std::string text;
        try {
            text = resp.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed chat completion response: ") + e.what());
        }
        text = strip_trailing_whitespace(std::move(text));
        if (text.empty()) throw EmptyCompletion();
        return text;
    }

    EmbeddingVector embed(const std::string& text) override {
        bool blank = true;
        for (char c : text)
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') { blank = false; break; }
        if (blank)
            throw std::invalid_argument("embed: text empty after whitespace collapse");

        nlohmann::json body;
        body["model"] = config_.embed_model;
        body["input"] = text;

        nlohmann::json resp = post_json("/embeddings", body);
        EmbeddingVector out;
        try {
            const auto& vec = resp.at("data").at(0).at("embedding");
            out.values.reserve(vec.size());
            for (const auto& v : vec) out.values.push_back(v.get<double>());
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed embeddings response: ") + e.what());
        }
        if (out.dim() != config_.embedding_dim)
            throw DimensionMismatch(config_.embedding_dim, out.dim());
        for (double v : out.values)
            if (!std::isfinite(v)) throw TransportError("embedding contains non-finite values");
        return out;
    }

    std::size_t embedding_dim() const override { return config_.embedding_dim; }

private:
    static void split_base_url(const std::string& url, std::string& origin, std::string& prefix) {
        auto scheme_end = url.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto slash = url.find('/', host_start);
        if (slash == std::string::npos) {
            origin = url;
            prefix.clear();
        } else {
            origin = url.substr(0, slash);
            prefix = url.substr(slash);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    nlohmann::json post_json(const std::string& route, const nlohmann::json& body) {
        detail::GateGuard guard(gate_);
        std::string payload = body.dump();
        std::string last_error;

        for (int attempt = 0; attempt <= config_.retries; ++attempt) {
            if (attempt > 0) {
                auto delay = std::chrono::milliseconds(
                    config_.backoff_base_ms * (1 << (attempt - 1)));
                std::this_thread::sleep_for(delay);
            }
            httplib::Client client(origin_);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            client.set_read_timeout(config_.timeout_seconds, 0);
            if (!config_.api_key.empty())
                client.set_bearer_token_auth(config_.api_key);

            auto res = client.Post(path_prefix_ + route, payload, "application/json");
            if (!res) {
                last_error = "connection failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 400) {
                last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
                continue;
            }
            nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded())
                throw TransportError("response is not valid JSON: " + res->body.substr(0, 200));
            return parsed;
        }
        throw TransportError("request to " + route + " failed after " +
                             std::to_string(config_.retries + 1) + " attempts; last error: " +
                             last_error);
    }

    HttpBackendConfig config_;
    std::string origin_;
    std::string path_prefix_;
    detail::RequestGate gate_;
};

} // namespace evorag::llm
