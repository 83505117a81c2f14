#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/extract/records.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"

namespace evorag::extract {

// Deterministic rendering of a community's relationships: sorted by
// (subject, predicate, object), one "entity1 -> entity2 -> relation ->
// relationship_description" line each.
inline std::string render_community_info(std::vector<TripletRecord> members) {
    std::sort(members.begin(), members.end(), [](const TripletRecord& a, const TripletRecord& b) {
        return std::tie(a.subject, a.predicate, a.object) <
               std::tie(b.subject, b.predicate, b.object);
    });
    std::string out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out += '\n';
        out += relationship_line(members[i]);
    }
    return out;
}

// Summarizes one community. A blank completion falls back to the mechanical
// summary (the joined member lines), so the build never stalls on a lazy
// backend.
inline std::string summarize_community(const std::vector<TripletRecord>& members,
                                       llm::Backend& backend, const llm::PromptLibrary& prompts) {
    if (members.empty())
        throw std::invalid_argument("summarize_community: members must be non-empty");
    std::string info = render_community_info(members);
    llm::ChatRequest request = prompts.build("community_summary", {{"community_info", info}});
    try {
        return backend.complete(request);
    } catch (const EmptyCompletion&) {
        return info;
    }
}

} // namespace evorag::extract
