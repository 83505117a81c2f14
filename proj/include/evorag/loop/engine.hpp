#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/extract/records.hpp"
#include "evorag/graph/hetero_graph.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"
#include "evorag/loop/trajectory.hpp"
#include "evorag/retrieval/evidence.hpp"

namespace evorag::loop {

struct LoopConfig {
    int horizon = 3;   // K: maximum evolution rounds per query
    retrieval::RetrievalOptions retrieval;
    bool keyword_expansion_initial = false;
    bool keyword_expansion_subqueries = true;
    bool always_synthesize = false;   // strict final synthesis even on reward-1 exit
};

// Raised when a backend transport failure aborts a query; carries whatever
// trajectory existed at that point for auditing.
class LoopTransportError : public TransportError {
public:
    LoopTransportError(const std::string& what, Trajectory partial)
        : TransportError(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

namespace detail {

inline bool is_unknown(const std::string& answer) {
    std::string t = extract::collapse_whitespace(answer);
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return extract::ascii_lower(t) == "unknown";
}

inline bool is_none(const std::string& completion) {
    return extract::ascii_lower(extract::collapse_whitespace(completion)) == "none";
}

// Prior steps as they appear inside respond / synthesis context blocks.
inline std::string history_block(const Trajectory& history) {
    if (history.steps.empty()) return {};
    std::string out = "Previous reasoning steps:\n";
    for (const auto& step : history.steps) {
        out += "- Sub-question: " + step.sub_query + "\n";
        out += "  Answer: " + step.answer + "\n";
    }
    return out;
}

// Prior steps in the query-evolution prompt's "Previous reasoning" slot,
// mirroring the template's own example formatting.
inline std::string prev_reasoning_block(const Trajectory& history) {
    if (history.steps.empty()) return "None";
    std::string out;
    for (const auto& step : history.steps) {
        out += "\n  - " + step.sub_query;
        out += "\n  - " + step.answer;
    }
    return out;
}

inline std::string triple_key(const std::string& s, const std::string& p, const std::string& o) {
    return extract::canonical_key(s) + '\x1f' + extract::canonical_key(p) + '\x1f' +
           extract::canonical_key(o);
}

} // namespace detail

// Response agent: answers the current (sub-)query strictly from the rendered
// evidence plus prior steps. "Unknown" is a legal, meaningful return.
inline std::string respond(const std::string& query, const retrieval::EvidenceSubgraph& evidence,
                           const Trajectory& history, llm::Backend& backend,
                           const llm::PromptLibrary& prompts) {
    std::string context = detail::history_block(history);
    if (!context.empty()) context += "\n";
    context += evidence.rendered_evidence;
    llm::ChatRequest request =
        prompts.build("answer_synthesis", {{"context_str", context}, {"query_str", query}});
    try {
        return backend.complete(request);
    } catch (const EmptyCompletion&) {
        return "Unknown";
    }
}

// Reflector sufficiency check: 1 iff the judge affirms with a YES verdict and
// the answer is not "Unknown"; every unparsable outcome is 0.
inline int judge_sufficiency(const std::string& query,
                             const retrieval::EvidenceSubgraph& evidence,
                             const std::string& answer, llm::Backend& backend,
                             const llm::PromptLibrary& prompts) {
    if (detail::is_unknown(answer)) return 0;
    llm::ChatRequest request = prompts.build("sufficiency_judge",
                                             {{"query_str", query},
                                              {"context_str", evidence.rendered_evidence},
                                              {"answer", answer}});
    std::string completion;
    try {
        completion = backend.complete(request);
    } catch (const EmptyCompletion&) {
        return 0;
    }
    // first alphabetic token decides
    std::string token;
    for (char c : completion) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            token.push_back(c);
        } else if (!token.empty()) {
            break;
        }
    }
    return extract::ascii_lower(token) == "yes" ? 1 : 0;
}

// Reflector query evolution: the next answerable sub-question, or nullopt
// (STOP) when the model returns 'None' or nothing.
inline std::optional<std::string> evolve_query(const std::string& original_query,
                                               const retrieval::EvidenceSubgraph& evidence,
                                               const Trajectory& history, llm::Backend& backend,
                                               const llm::PromptLibrary& prompts) {
    llm::ChatRequest request =
        prompts.build("query_evolution", {{"query_str", original_query},
                                          {"context_str", evidence.rendered_evidence},
                                          {"prev_reasoning", detail::prev_reasoning_block(history)}});
    std::string completion;
    try {
        completion = backend.complete(request);
    } catch (const EmptyCompletion&) {
        return std::nullopt;
    }
    std::string sub_query = extract::collapse_whitespace(completion);
    if (sub_query.rfind("Next question:", 0) == 0)
        sub_query = extract::collapse_whitespace(sub_query.substr(14));
    if (sub_query.empty() || detail::is_none(sub_query)) return std::nullopt;
    return sub_query;
}

// Constructor subgraph evolution: union the current evidence with a fresh
// retrieval for the sub-query, then apply the refinement prompt to the
// union's triple rendering. Dropped triples vanish, new ones come back
// flagged inferred; chunks and communities of the union stay untouched. An
// unparsable refinement fails open to the unrefined union.
inline retrieval::EvidenceSubgraph evolve_subgraph(const std::string& sub_query,
                                                   const retrieval::EvidenceSubgraph& current,
                                                   const graph::HeteroGraph& g,
                                                   llm::Backend& backend,
                                                   const llm::PromptLibrary& prompts,
                                                   const retrieval::RetrievalOptions& options) {
    retrieval::EvidenceSubgraph fresh =
        retrieval::retrieve_subgraph(sub_query, g, backend, prompts, options);

    retrieval::EvidenceSubgraph merged;
    std::set<std::string> seed_ids;
    for (const auto& s : current.seeds)
        if (seed_ids.insert(s.node_id).second) merged.seeds.push_back(s);
    for (const auto& s : fresh.seeds)
        if (seed_ids.insert(s.node_id).second) merged.seeds.push_back(s);
    std::sort(merged.seeds.begin(), merged.seeds.end(),
              [](const retrieval::ScoredNode& a, const retrieval::ScoredNode& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.node_id < b.node_id;
              });
    for (const auto& id : current.expansion)
        if (!seed_ids.count(id)) merged.expansion.insert(id);
    for (const auto& id : fresh.expansion)
        if (!seed_ids.count(id)) merged.expansion.insert(id);

    std::map<std::string, retrieval::EvidenceTriple> by_key;
    std::vector<std::string> key_order;
    auto add_triple = [&](const retrieval::EvidenceTriple& t) {
        std::string key = detail::triple_key(t.subject, t.predicate, t.object);
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            by_key.emplace(key, t);
            key_order.push_back(key);
        } else if (it->second.inferred && !t.inferred) {
            it->second = t;   // graph-backed fact supersedes an inferred copy
        }
    };
    for (const auto& t : current.triples) add_triple(t);
    for (const auto& t : fresh.triples) add_triple(t);

    std::vector<retrieval::EvidenceTriple> union_triples;
    union_triples.reserve(key_order.size());
    for (const auto& key : key_order) union_triples.push_back(by_key.at(key));

    std::vector<std::string> lines;
    for (const auto& t : union_triples)
        lines.push_back(extract::triple_line(t.subject, t.predicate, t.object));
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    std::string rendered;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) rendered += '\n';
        rendered += lines[i];
    }

    llm::ChatRequest request = prompts.build(
        "subgraph_refinement", {{"query_str", sub_query}, {"subgraph_triples", rendered}});
    std::string completion;
    bool have_completion = true;
    try {
        completion = backend.complete(request);
    } catch (const EmptyCompletion&) {
        have_completion = false;
    }

    if (!have_completion) {
        merged.triples = std::move(union_triples);
    } else if (detail::is_none(completion)) {
        merged.triples.clear();
    } else {
        std::vector<retrieval::EvidenceTriple> refined;
        std::size_t pos = 0;
        while (pos <= completion.size()) {
            auto eol = completion.find('\n', pos);
            std::string line = completion.substr(
                pos, eol == std::string::npos ? std::string::npos : eol - pos);
            pos = eol == std::string::npos ? completion.size() + 1 : eol + 1;

            std::vector<std::string> parts;
            std::size_t at = 0;
            while (true) {
                auto arrow = line.find("->", at);
                if (arrow == std::string::npos) {
                    parts.push_back(extract::collapse_whitespace(line.substr(at)));
                    break;
                }
                parts.push_back(extract::collapse_whitespace(line.substr(at, arrow - at)));
                at = arrow + 2;
            }
            if (parts.size() != 3 || parts[0].empty() || parts[2].empty()) continue;

            auto it = by_key.find(detail::triple_key(parts[0], parts[1], parts[2]));
            if (it != by_key.end())
                refined.push_back(it->second);
            else
                refined.push_back({parts[0], parts[1], parts[2], "", true});
        }
        if (refined.empty()) {
            merged.triples = std::move(union_triples);   // fail open
        } else {
            // drop duplicate echoes, keep first occurrence
            std::set<std::string> seen;
            for (auto& t : refined)
                if (seen.insert(detail::triple_key(t.subject, t.predicate, t.object)).second)
                    merged.triples.push_back(std::move(t));
        }
    }

    merged.rendered_evidence = retrieval::render_evidence(merged, g, options.evidence_budget);
    return merged;
}

// Final synthesis over the whole trajectory. On a reward-1 exit the accepted
// answer already passed the sufficiency check and is reused without another
// call unless always_synthesize is set.
inline std::string synthesize_final(const std::string& query, const Trajectory& trajectory,
                                    llm::Backend& backend, const llm::PromptLibrary& prompts,
                                    bool always_synthesize = false) {
    if (trajectory.steps.empty())
        throw std::invalid_argument("synthesize_final: trajectory must be non-empty");
    const TrajectoryStep& last = trajectory.steps.back();
    if (last.reward == 1 && !always_synthesize) return last.answer;

    std::string context = detail::history_block(trajectory);
    context += "\n" + last.subgraph.rendered_evidence;
    llm::ChatRequest request =
        prompts.build("answer_synthesis", {{"context_str", context}, {"query_str", query}});
    try {
        return backend.complete(request);
    } catch (const EmptyCompletion&) {
        return "Unknown";
    }
}

// The full online loop: initial retrieval, then respond -> judge ->
// (stop on reward 1) -> evolve query (stop on 'None' or a repeated
// sub-query) -> evolve subgraph -> record, for at most `horizon` rounds,
// then final synthesis. The persisted graph is never touched; evolution
// operates on per-query working copies.
inline std::pair<std::string, Trajectory> run_loop(const std::string& query,
                                                   const graph::HeteroGraph& g,
                                                   const LoopConfig& config,
                                                   llm::Backend& backend,
                                                   const llm::PromptLibrary& prompts) {
    if (config.horizon < 1)
        throw std::invalid_argument("run_loop: horizon must be >= 1");

    Trajectory traj;
    traj.original_query = query;
    try {
        retrieval::RetrievalOptions initial = config.retrieval;
        initial.use_keyword_expansion = config.keyword_expansion_initial;
        retrieval::EvidenceSubgraph evidence =
            retrieval::retrieve_subgraph(query, g, backend, prompts, initial);

        std::string current_query = query;
        std::set<std::string> seen_queries{extract::canonical_key(query)};

        for (int round = 0; round < config.horizon; ++round) {
            std::string answer = respond(current_query, evidence, traj, backend, prompts);
            int reward = judge_sufficiency(query, evidence, answer, backend, prompts);
            if (reward == 1) {
                traj.steps.push_back({current_query, answer, 1, evidence});
                break;
            }
            std::optional<std::string> next = evolve_query(query, evidence, traj, backend, prompts);
            if (next && !seen_queries.insert(extract::canonical_key(*next)).second)
                next.reset();   // repeated sub-query: treat as STOP
            if (!next) {
                traj.steps.push_back({current_query, answer, 0, evidence});
                break;
            }
            retrieval::RetrievalOptions sub = config.retrieval;
            sub.use_keyword_expansion = config.keyword_expansion_subqueries;
            evidence = evolve_subgraph(*next, evidence, g, backend, prompts, sub);
            traj.steps.push_back({*next, answer, 0, evidence});
            current_query = *next;
        }

        traj.final_answer =
            synthesize_final(query, traj, backend, prompts, config.always_synthesize);
        return {*traj.final_answer, traj};
    } catch (const TransportError& e) {
        throw LoopTransportError(e.what(), std::move(traj));
    }
}

} // namespace evorag::loop
