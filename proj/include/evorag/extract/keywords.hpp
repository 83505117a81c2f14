#pragma once

#include <set>
#include <string>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/extract/records.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"

namespace evorag::extract {

// Expands a query into itself plus synonym keywords ('^'-separated backend
// output). Case-insensitive dedup, capped at max_keywords entries total; any
// unusable completion degrades to just the original query.
inline std::vector<std::string> expand_keywords(const std::string& query, int max_keywords,
                                                llm::Backend& backend,
                                                const llm::PromptLibrary& prompts) {
    if (query.empty())
        throw std::invalid_argument("expand_keywords: query must be non-empty");
    if (max_keywords < 1)
        throw std::invalid_argument("expand_keywords: max_keywords must be >= 1");

    std::string completion;
    try {
        llm::ChatRequest request = prompts.build(
            "keyword_expansion",
            {{"max_keywords", std::to_string(max_keywords)}, {"query_str", query}});
        completion = backend.complete(request);
    } catch (const EmptyCompletion&) {
        completion.clear();
    }

    if (completion.rfind("KEYWORDS:", 0) == 0)
        completion.erase(0, 9);

    std::vector<std::string> out;
    std::set<std::string> seen;
    auto add = [&](const std::string& raw) {
        std::string term = collapse_whitespace(raw);
        if (term.empty()) return;
        if (static_cast<int>(out.size()) >= max_keywords) return;
        if (!seen.insert(canonical_key(term)).second) return;
        out.push_back(term);
    };

    add(query);
    std::size_t pos = 0;
    while (pos <= completion.size()) {
        auto sep = completion.find('^', pos);
        if (sep == std::string::npos) {
            add(completion.substr(pos));
            break;
        }
        add(completion.substr(pos, sep - pos));
        pos = sep + 1;
    }
    return out;
}

} // namespace evorag::extract
