#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/extract/records.hpp"
#include "evorag/ingest/chunker.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"

namespace evorag::extract {

namespace detail {

// Locates the outermost balanced {...} object in a completion, tolerating
// braces inside JSON string literals.
inline bool find_braced_object(const std::string& text, std::size_t& begin, std::size_t& end) {
    auto start = text.find('{');
    if (start == std::string::npos) return false;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) {
                begin = start;
                end = i + 1;
                return true;
            }
        }
    }
    return false;
}

inline bool parse_extraction_json(const std::string& completion, nlohmann::json& out) {
    std::size_t begin = 0, end = 0;
    if (find_braced_object(completion, begin, end)) {
        out = nlohmann::json::parse(completion.substr(begin, end - begin), nullptr, false);
        if (!out.is_discarded() && out.is_object()) return true;
    }
    // Fall back to the widest brace span; recovers objects with unbalanced
    // braces inside malformed string literals.
    auto first = completion.find('{');
    auto last = completion.rfind('}');
    if (first == std::string::npos || last == std::string::npos || last <= first) return false;
    out = nlohmann::json::parse(completion.substr(first, last - first + 1), nullptr, false);
    return !out.is_discarded() && out.is_object();
}

} // namespace detail

struct ExtractorOptions {
    int max_triplets = 2;
    int reprompts = 2;   // re-asks after a malformed completion
};

// One prompt-driven extraction pass over a chunk. Collects entities and
// relationships, canonicalizes names, repairs relationships whose endpoints
// were not listed as entities, and truncates to max_triplets in listed order.
// Throws ExtractionParseFailure once the re-prompt budget is exhausted; the
// caller skips the chunk and keeps building.
inline ExtractionResult extract_triplets(const ingest::Chunk& chunk, llm::Backend& backend,
                                         const llm::PromptLibrary& prompts,
                                         const ExtractorOptions& options = {}) {
    if (chunk.text.empty())
        throw std::invalid_argument("extract_triplets: chunk text must be non-empty");

    llm::ChatRequest request = prompts.build(
        "triplet_extraction",
        {{"max_knowledge_triplets", std::to_string(options.max_triplets)}, {"text", chunk.text}});

    nlohmann::json parsed;
    int attempts = 0;
    bool ok = false;
    for (; attempts <= options.reprompts && !ok; ) {
        ++attempts;
        std::string completion;
        try {
            completion = backend.complete(request);
        } catch (const EmptyCompletion&) {
            completion.clear();
        }
        ok = !completion.empty() && detail::parse_extraction_json(completion, parsed);
        if (!ok && attempts <= options.reprompts) {
            request.messages.push_back({llm::Role::assistant, completion});
            request.messages.push_back(
                {llm::Role::user,
                 "Your previous output could not be parsed. Respond with the valid JSON "
                 "structure only: { \"entities\": [...], \"relationships\": [...] }"});
        }
    }
    if (!ok)
        throw ExtractionParseFailure("chunk " + chunk.chunk_id + ": no parsable extraction after " +
                                     std::to_string(attempts) + " attempts");
    if (!parsed.contains("entities") && !parsed.contains("relationships"))
        throw ExtractionParseFailure("chunk " + chunk.chunk_id +
                                     ": object lacks entities/relationships fields");

    ExtractionResult result;
    result.parse_attempts = attempts;

    std::map<std::string, std::size_t> by_key;   // canonical key -> index in result.entities
    auto intern_entity = [&](const std::string& raw, const std::string& type,
                             const std::string& description) -> std::size_t {
        std::string display = collapse_whitespace(raw);
        std::string key = canonical_key(raw);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            EntityRecord rec;
            rec.name = display;
            rec.entity_type = type;
            rec.description = description;
            result.entities.push_back(std::move(rec));
            by_key[key] = result.entities.size() - 1;
            return result.entities.size() - 1;
        }
        EntityRecord& rec = result.entities[it->second];
        if (display != rec.name) rec.aliases.insert(display);
        if (rec.entity_type.empty()) rec.entity_type = type;
        if (rec.description.empty()) rec.description = description;
        return it->second;
    };

    if (parsed.contains("entities") && parsed["entities"].is_array()) {
        for (const auto& e : parsed["entities"]) {
            if (!e.is_object()) continue;
            std::string name = e.value("entity_name", "");
            if (canonical_key(name).empty()) continue;
            intern_entity(name, e.value("entity_type", ""), e.value("entity_description", ""));
        }
    }

    if (parsed.contains("relationships") && parsed["relationships"].is_array()) {
        for (const auto& r : parsed["relationships"]) {
            if (static_cast<int>(result.relationships.size()) >= options.max_triplets) break;
            if (!r.is_object()) continue;
            std::string subject = r.value("source_entity", "");
            std::string object = r.value("target_entity", "");
            if (canonical_key(subject).empty() || canonical_key(object).empty()) continue;
            // Endpoints missing from the entities list are synthesized rather
            // than dropping the relationship.
            std::size_t si = intern_entity(subject, "", "");
            std::size_t oi = intern_entity(object, "", "");
            TripletRecord t;
            t.subject = result.entities[si].name;
            t.object = result.entities[oi].name;
            t.predicate = collapse_whitespace(r.value("relation", ""));
            t.description = r.value("relationship_description", "");
            t.subject_type = result.entities[si].entity_type;
            t.object_type = result.entities[oi].entity_type;
            t.source_chunk = chunk.chunk_id;
            result.relationships.push_back(std::move(t));
        }
    }
    return result;
}

} // namespace evorag::extract
