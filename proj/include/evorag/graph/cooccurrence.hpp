#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evorag/extract/records.hpp"

namespace evorag::graph {

// Weighted entity co-occurrence graph. Nodes are canonical entity keys; the
// weight of {a, b} counts the triplets whose endpoints are exactly that pair.
// Self-pairs contribute the node but no edge.
struct CoOccurrenceGraph {
    std::vector<std::string> nodes;                              // sorted, unique
    std::map<std::pair<std::string, std::string>, int> edges;    // key pair with first < second

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
};

inline CoOccurrenceGraph build_cooccurrence_graph(
    const std::vector<extract::TripletRecord>& triplets) {
    std::set<std::string> nodes;
    CoOccurrenceGraph g;
    for (const auto& t : triplets) {
        std::string a = extract::canonical_key(t.subject);
        std::string b = extract::canonical_key(t.object);
        if (a.empty() || b.empty()) continue;
        nodes.insert(a);
        nodes.insert(b);
        if (a == b) continue;
        if (b < a) std::swap(a, b);
        g.edges[{a, b}] += 1;
    }
    g.nodes.assign(nodes.begin(), nodes.end());
    return g;
}

} // namespace evorag::graph
