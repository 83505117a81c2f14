#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/extract/extractor.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"

namespace evorag::eval {

enum class Winner { A, B, Tie };

inline const char* winner_name(Winner w) {
    switch (w) {
    case Winner::A: return "A";
    case Winner::B: return "B";
    case Winner::Tie: return "tie";
    }
    return "?";
}

inline constexpr std::array<const char*, 4> kDimensions = {"Comprehensiveness", "Diversity",
                                                           "Empowerment", "Overall"};

struct PairwiseVerdict {
    bool valid = true;
    std::map<std::string, Winner> winners;   // keyed by dimension name
    std::string explanations;
};

namespace detail {

// Winner slot in one judge run: 1 for "Answer 1", 2 for "Answer 2".
inline std::optional<int> parse_slot(const nlohmann::json& section) {
    if (!section.is_object() || !section.contains("Winner") || !section["Winner"].is_string())
        return std::nullopt;
    std::string text = section["Winner"].get<std::string>();
    bool one = text.find('1') != std::string::npos;
    bool two = text.find('2') != std::string::npos;
    if (one == two) return std::nullopt;
    return one ? 1 : 2;
}

struct JudgeRun {
    std::map<std::string, int> slots;   // dimension -> 1/2
    std::string explanations;
};

inline std::optional<JudgeRun> run_judge(const std::string& question, const std::string& first,
                                         const std::string& second, llm::Backend& backend,
                                         const llm::PromptLibrary& prompts) {
    llm::ChatRequest request = prompts.build(
        "answer_evaluator", {{"query", question}, {"answer1", first}, {"answer2", second}});
    std::string completion;
    try {
        completion = backend.complete(request);
    } catch (const EmptyCompletion&) {
        return std::nullopt;
    }
    nlohmann::json parsed;
    if (!extract::detail::parse_extraction_json(completion, parsed)) return std::nullopt;

    JudgeRun run;
    for (const char* dim : kDimensions) {
        std::string field = std::string(dim) == "Overall" ? "Overall Winner" : dim;
        if (!parsed.contains(field)) return std::nullopt;
        auto slot = parse_slot(parsed[field]);
        if (!slot) return std::nullopt;
        run.slots[dim] = *slot;
        if (parsed[field].contains("Explanation") && parsed[field]["Explanation"].is_string())
            run.explanations += parsed[field]["Explanation"].get<std::string>() + "\n";
    }
    return run;
}

} // namespace detail

// Positional-bias control: the evaluator prompt runs twice with the answers
// swapped. A dimension resolves to a winner only when both orderings agree
// after un-swapping; disagreement scores as a tie. Either run failing to
// parse invalidates the whole comparison.
inline PairwiseVerdict judge_pairwise(const std::string& question, const std::string& answer_a,
                                      const std::string& answer_b, llm::Backend& backend,
                                      const llm::PromptLibrary& prompts) {
    if (answer_a.empty() || answer_b.empty())
        throw std::invalid_argument("judge_pairwise: answers must be non-empty");

    auto forward = detail::run_judge(question, answer_a, answer_b, backend, prompts);
    auto swapped = detail::run_judge(question, answer_b, answer_a, backend, prompts);

    PairwiseVerdict verdict;
    if (!forward || !swapped) {
        verdict.valid = false;
        return verdict;
    }
    for (const char* dim : kDimensions) {
        Winner from_forward = forward->slots[dim] == 1 ? Winner::A : Winner::B;
        Winner from_swapped = swapped->slots[dim] == 1 ? Winner::B : Winner::A;
        verdict.winners[dim] = from_forward == from_swapped ? from_forward : Winner::Tie;
    }
    verdict.explanations = forward->explanations + swapped->explanations;
    return verdict;
}

} // namespace evorag::eval
