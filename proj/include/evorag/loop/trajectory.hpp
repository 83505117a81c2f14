#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evorag/retrieval/evidence.hpp"

namespace evorag::loop {

struct TrajectoryStep {
    std::string sub_query;   // the original query at step 0
    std::string answer;
    int reward = 0;          // 0 or 1
    retrieval::EvidenceSubgraph subgraph;
};

struct Trajectory {
    std::string original_query;
    std::vector<TrajectoryStep> steps;
    std::optional<std::string> final_answer;
};

// Line-delimited audit log: one record per step (sub-query, answer, reward,
// seed node ids, inferred triples), then one closing record with the final
// answer when present.
inline void write_audit(const Trajectory& traj, std::ostream& out) {
    std::size_t index = 0;
    for (const auto& step : traj.steps) {
        nlohmann::json rec;
        rec["step"] = index++;
        rec["sub_query"] = step.sub_query;
        rec["answer"] = step.answer;
        rec["reward"] = step.reward;
        rec["seed_nodes"] = step.subgraph.seed_ids();
        auto& inferred = rec["inferred_triples"] = nlohmann::json::array();
        for (const auto& t : step.subgraph.triples)
            if (t.inferred)
                inferred.push_back(extract::triple_line(t.subject, t.predicate, t.object));
        out << rec.dump() << '\n';
    }
    if (traj.final_answer) {
        nlohmann::json rec;
        rec["final_answer"] = *traj.final_answer;
        rec["original_query"] = traj.original_query;
        out << rec.dump() << '\n';
    }
}

} // namespace evorag::loop
