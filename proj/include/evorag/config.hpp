#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/graph/build.hpp"
#include "evorag/llm/http_backend.hpp"
#include "evorag/llm/prompts.hpp"
#include "evorag/llm/scripted_backend.hpp"
#include "evorag/loop/engine.hpp"

namespace evorag {

// Every knob in one place. Values come from a JSON config file; the API key
// is taken from the environment; command-line flags override both.
struct EngineConfig {
    // backends
    std::string backend_mode = "scripted";   // "scripted" | "http"
    std::string script_path;
    std::string base_url;
    std::string chat_model;
    std::string embed_model;
    std::string judge_base_url;   // empty: reuse the chat backend
    std::string judge_model;
    std::string api_key_env = "EVORAG_API_KEY";
    std::size_t embedding_dim = 1024;
    int retries = 2;
    int max_in_flight = 8;

    // chunking
    std::size_t chunk_size = 1024;
    std::size_t overlap = 20;
    bool snap_to_sentence = false;

    // extraction / clustering
    int max_triplets = 2;
    std::size_t max_cluster_size = 5;
    double resolution = 1.0;
    std::uint64_t seed = 0;

    // retrieval / loop
    std::size_t top_k = 5;
    int horizon = 3;
    std::size_t evidence_budget = 4096;
    int max_keywords = 10;
    bool per_kind_top_k = false;
    bool keyword_expansion_initial = false;
    bool keyword_expansion_subqueries = true;
    bool always_synthesize = false;

    std::string prompt_dir;
    std::string index_path = "index";
    std::size_t workers = 0;   // 0 = logical cores

    static EngineConfig load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file: " + path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ConfigError("config file is not a JSON object: " + path);

        EngineConfig c;
        c.backend_mode = j.value("backend_mode", c.backend_mode);
        c.script_path = j.value("script_path", c.script_path);
        c.base_url = j.value("base_url", c.base_url);
        c.chat_model = j.value("chat_model", c.chat_model);
        c.embed_model = j.value("embed_model", c.embed_model);
        c.judge_base_url = j.value("judge_base_url", c.judge_base_url);
        c.judge_model = j.value("judge_model", c.judge_model);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.retries = j.value("retries", c.retries);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.chunk_size = j.value("chunk_size", c.chunk_size);
        c.overlap = j.value("overlap", c.overlap);
        c.snap_to_sentence = j.value("snap_to_sentence", c.snap_to_sentence);
        c.max_triplets = j.value("max_triplets", c.max_triplets);
        c.max_cluster_size = j.value("max_cluster_size", c.max_cluster_size);
        c.resolution = j.value("resolution", c.resolution);
        c.seed = j.value("seed", c.seed);
        c.top_k = j.value("top_k", c.top_k);
        c.horizon = j.value("horizon", c.horizon);
        c.evidence_budget = j.value("evidence_budget", c.evidence_budget);
        c.max_keywords = j.value("max_keywords", c.max_keywords);
        c.per_kind_top_k = j.value("per_kind_top_k", c.per_kind_top_k);
        c.keyword_expansion_initial =
            j.value("keyword_expansion_initial", c.keyword_expansion_initial);
        c.keyword_expansion_subqueries =
            j.value("keyword_expansion_subqueries", c.keyword_expansion_subqueries);
        c.always_synthesize = j.value("always_synthesize", c.always_synthesize);
        c.prompt_dir = j.value("prompt_dir", c.prompt_dir);
        c.index_path = j.value("index_path", c.index_path);
        c.workers = j.value("workers", c.workers);
        c.validate();
        return c;
    }

    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw ConfigError("config field " + field + " " + why);
        };
        if (backend_mode != "scripted" && backend_mode != "http")
            fail("backend_mode", "must be 'scripted' or 'http'");
        if (embedding_dim < 1) fail("embedding_dim", "must be >= 1");
        if (chunk_size < 1) fail("chunk_size", "must be >= 1");
        if (overlap >= chunk_size) fail("overlap", "must be smaller than chunk_size");
        if (max_triplets < 1) fail("max_triplets", "must be >= 1");
        if (max_cluster_size < 1) fail("max_cluster_size", "must be >= 1");
        if (resolution <= 0.0) fail("resolution", "must be positive");
        if (top_k < 1) fail("top_k", "must be >= 1");
        if (horizon < 1) fail("horizon", "must be >= 1");
        if (evidence_budget < 1) fail("evidence_budget", "must be >= 1");
        if (max_keywords < 1) fail("max_keywords", "must be >= 1");
        if (retries < 0) fail("retries", "must be >= 0");
        if (max_in_flight < 1) fail("max_in_flight", "must be >= 1");
    }

    graph::BuildConfig build_config() const {
        graph::BuildConfig b;
        b.chunking = {chunk_size, overlap, snap_to_sentence};
        b.extractor.max_triplets = max_triplets;
        b.leiden = {max_cluster_size, resolution, seed};
        b.workers = workers;
        return b;
    }

    retrieval::RetrievalOptions retrieval_options() const {
        retrieval::RetrievalOptions r;
        r.top_k = top_k;
        r.per_kind_top_k = per_kind_top_k;
        r.evidence_budget = evidence_budget;
        r.max_keywords = max_keywords;
        return r;
    }

    loop::LoopConfig loop_config() const {
        loop::LoopConfig l;
        l.horizon = horizon;
        l.retrieval = retrieval_options();
        l.keyword_expansion_initial = keyword_expansion_initial;
        l.keyword_expansion_subqueries = keyword_expansion_subqueries;
        l.always_synthesize = always_synthesize;
        return l;
    }

    llm::PromptLibrary prompt_library() const {
        auto lib = llm::PromptLibrary::builtin();
        if (!prompt_dir.empty()) lib.load_directory(prompt_dir);
        return lib;
    }

    std::unique_ptr<llm::Backend> make_backend(bool judge = false) const {
        if (backend_mode == "scripted") {
            if (script_path.empty())
                throw ConfigError("config field script_path must be set for scripted mode");
            return std::make_unique<llm::ScriptedBackend>(llm::load_script(script_path),
                                                          embedding_dim, seed);
        }
        llm::HttpBackendConfig h;
        h.base_url = judge && !judge_base_url.empty() ? judge_base_url : base_url;
        h.chat_model = judge && !judge_model.empty() ? judge_model : chat_model;
        h.embed_model = embed_model;
        h.embedding_dim = embedding_dim;
        h.retries = retries;
        h.max_in_flight = max_in_flight;
        if (const char* key = std::getenv(api_key_env.c_str())) h.api_key = key;
        if (h.base_url.empty())
            throw ConfigError("config field base_url must be set for http mode");
        return std::make_unique<llm::HttpBackend>(h);
    }
};

} // namespace evorag
