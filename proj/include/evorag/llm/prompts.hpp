#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/llm/chat.hpp"

namespace evorag::llm {

namespace prompt_text {

// Template files may carry [system] / [user] section markers; a file without
// markers renders as a single user message. Placeholders of the form {name}
// are substituted verbatim.

inline constexpr const char* kTripletExtraction = R"PT(-Goal-
Given a text document, identify all entities and their entity types from the text and all relationships among the identified entities.
Given the text, extract up to {max_knowledge_triplets} entity-relation triplets.

-Steps-
1. Identify all entities. For each, extract:
  entity_name | entity_type | entity_description

2. Identify all related (source, target) pairs. For each, extract:
  source_entity | target_entity | relation | relationship_description

3. Output valid JSON only:
  { "entities": [...], "relationships": [...] }

-An Output Example-
{
  "entities": [
    { "entity_name": "Albert Einstein", "entity_type": "Person", "entity_description": "..." },
    { "entity_name": "Theory of Relativity", "entity_type": "Scientific Theory", "entity_description": "..." },
    { "entity_name": "Nobel Prize in Physics", "entity_type": "Award", "entity_description": "..." }
  ],
  "relationships": [
    { "source_entity": "Albert Einstein", "target_entity": "Theory of Relativity", "relation": "developed", "relationship_description": "..." },
    { "source_entity": "Albert Einstein", "target_entity": "Nobel Prize in Physics", "relation": "won", "relationship_description": "..." }
  ]
}

-Real Data-
####################
text: {text}
####################
output:)PT";

inline constexpr const char* kCommunitySummary = R"PT([system]
You are provided with a set of relationships from a knowledge graph, each represented as entity1 -> entity2 -> relation -> relationship_description.
Your task is to create a summary of these relationships. The summary should include: Names of the entities involved, A concise synthesis of the relationship descriptions.
The goal is to capture the most critical and relevant details that highlight the nature and significance of each relationship. Ensure the summary is coherent and integrates information to emphasize key aspects. Avoid redundancy and maintain clarity.
[user]
####################
text: {community_info}
####################)PT";

inline constexpr const char* kKeywordExpansion = R"PT([system]
Given some initial query, generate synonyms or related keywords up to {max_keywords} in total, considering possible cases of capitalization, pluralization, common expressions, etc.
Provide all synonyms/keywords separated by '^' symbols: 'keyword1^keyword2^...'.
Note: result should be in one line, separated by '^' symbols.
[user]
----
QUERY: {query_str}
----)PT";

inline constexpr const char* kQueryEvolution = R"PT([system]
The original question is as follows: {query_str}
We have an opportunity to answer some, or all of the question from a knowledge source.
Context information for the knowledge source is provided below, as well as previous reasoning steps.
Given the context and previous reasoning, return a question that can be answered from the context.
This question can be the same as the original question, or represent a subcomponent.
It should not be irrelevant to the original question.
If no further information can be extracted, return 'None'.

Examples:

Question: How many Grand Slam titles does the winner of the 2020 Australian Open have?
Knowledge source context: Provides names of the winners of the 2020 Australian Open
Previous reasoning: None
Next question: Who was the winner of the 2020 Australian Open?

Question: How many Grand Slam titles does the winner of the 2020 Australian Open have?
Knowledge source context: Includes biographical info for each winner
Previous reasoning:
  - Who was the winner of the 2020 Australian Open?
  - The winner was Novak Djokovic.
Next question: How many Grand Slam titles does Novak Djokovic have?

Current Input:

Question: {query_str}
Knowledge source context: {context_str}
Previous reasoning: {prev_reasoning})PT";

inline constexpr const char* kSubgraphRefinement = R"PT([system]
You are given a sub-graph extracted from a knowledge graph, represented as a list of triples:
entity1 -> relation -> entity2.
This sub-graph may contain irrelevant, redundant, or incomplete information.
Your task is to refine the sub-graph by:
Removing irrelevant or noisy triples not related to the query,
Filling in missing but inferable relationships (if strongly supported),
Ensuring entity names are normalized (e.g., consistent capitalization, singular/plural).
Return the refined sub-graph in the same triple format, one per line.
If no refinement is needed, return the original sub-graph.
If all triples are irrelevant, return 'None'.

Example Input:

Query: What are the major achievements of Marie Curie?
Sub-graph:
Marie Curie -> won -> Nobel Prize in Physics
Marie Curie -> born in -> Warsaw
Marie Curie -> spouse -> Pierre Curie
Apple Inc. -> founded by -> Steve Jobs

Refined Output:
Marie Curie -> won -> Nobel Prize in Physics
Marie Curie -> won -> Nobel Prize in Chemistry
Marie Curie -> spouse -> Pierre Curie

Current Input:

Query: {query_str}
Sub-graph:
{subgraph_triples})PT";

inline constexpr const char* kAnswerSynthesis = R"PT([system]
Context information is provided below.
You must answer the query using only this context, and not any prior knowledge.
Do not make assumptions or add information not present in the context.
If the answer cannot be determined from the context, respond with 'Unknown'.

---------------------
{context_str}
---------------------

Query: {query_str}

Instructions:
Extract or synthesize the answer strictly from the provided context.
Keep the answer concise and factual.
Avoid phrases like "The context states that..." - just give the answer.)PT";

inline constexpr const char* kSufficiencyJudge = R"PT([system]
You are given a question, the evidence retrieved for it, and a candidate answer.
Decide whether the evidence is sufficient to answer the question and the candidate answer resolves it.
Respond with a single word: YES or NO.
[user]
Question: {query_str}

Evidence:
{context_str}

Candidate answer: {answer}

Verdict (YES or NO):)PT";

inline constexpr const char* kAnswerEvaluator = R"PT([system]
You are an expert tasked with evaluating two answers to the same question based on three criteria: Comprehensiveness, Diversity, and Empowerment.

Evaluation Criteria:

- Comprehensiveness:
How much detail does the answer provide to cover all aspects and sub-questions implied by the original query?

- Diversity:
How varied and rich is the answer in providing different perspectives, evidence sources, or reasoning paths?

- Empowerment:
How well does the answer help the reader understand the topic and make informed judgments or decisions?

Instructions:
Compare Answer 1 and Answer 2 for each criterion.
Choose the better answer and explain why.
Select an overall winner based on balance across all three.

Input:

Question: {query}
Answer 1: {answer1}
Answer 2: {answer2}

Output Format (JSON):
{
  "Comprehensiveness": {
    "Winner": "Answer 1 or Answer 2",
    "Explanation": "..."
  },
  "Diversity": {
    "Winner": "Answer 1 or Answer 2",
    "Explanation": "..."
  },
  "Empowerment": {
    "Winner": "Answer 1 or Answer 2",
    "Explanation": "..."
  },
  "Overall Winner": {
    "Winner": "Answer 1 or Answer 2",
    "Explanation": "..."
  }
})PT";

} // namespace prompt_text

class PromptLibrary {
public:
    static PromptLibrary builtin() {
        PromptLibrary lib;
        lib.templates_ = {
            {"triplet_extraction", prompt_text::kTripletExtraction},
            {"community_summary", prompt_text::kCommunitySummary},
            {"keyword_expansion", prompt_text::kKeywordExpansion},
            {"query_evolution", prompt_text::kQueryEvolution},
            {"subgraph_refinement", prompt_text::kSubgraphRefinement},
            {"answer_synthesis", prompt_text::kAnswerSynthesis},
            {"sufficiency_judge", prompt_text::kSufficiencyJudge},
            {"answer_evaluator", prompt_text::kAnswerEvaluator},
        };
        return lib;
    }

    // Overrides templates from `<name>.txt` files found in `dir`.
    void load_directory(const std::string& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir))
            throw ConfigError("prompt template directory not found: " + dir);
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::ostringstream buf;
            buf << in.rdbuf();
            templates_[entry.path().stem().string()] = buf.str();
        }
    }

    // Writes every template out as `<name>.txt`, byte-identical to storage.
    void write_directory(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        for (const auto& [name, text] : templates_) {
            std::ofstream out(fs::path(dir) / (name + ".txt"), std::ios::binary);
            out << text;
        }
    }

    const std::string& text(const std::string& name) const {
        auto it = templates_.find(name);
        if (it == templates_.end())
            throw ConfigError("unknown prompt template: " + name);
        return it->second;
    }

    using Substitutions = std::vector<std::pair<std::string, std::string>>;

    // Renders a template into a ChatRequest: placeholders substituted
    // verbatim, [system]/[user] sections split into messages.
    ChatRequest build(const std::string& name, const Substitutions& subs) const {
        std::string body = substitute(text(name), subs);
        ChatRequest req;
        if (body.rfind("[system]\n", 0) != 0) {
            req.messages.push_back({Role::user, std::move(body)});
            return req;
        }
        std::string system_part = body.substr(9);
        auto user_at = system_part.find("\n[user]\n");
        if (user_at == std::string::npos) {
            req.messages.push_back({Role::system, std::move(system_part)});
        } else {
            req.messages.push_back({Role::system, system_part.substr(0, user_at)});
            req.messages.push_back({Role::user, system_part.substr(user_at + 8)});
        }
        return req;
    }

    static std::string substitute(std::string body, const Substitutions& subs) {
        for (const auto& [key, value] : subs) {
            std::string needle = "{" + key + "}";
            std::size_t pos = 0;
            while ((pos = body.find(needle, pos)) != std::string::npos) {
                body.replace(pos, needle.size(), value);
                pos += value.size();
            }
        }
        return body;
    }

    const std::map<std::string, std::string>& all() const { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

} // namespace evorag::llm
