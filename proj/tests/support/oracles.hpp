#pragma once

// Test-side oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evorag/graph/cooccurrence.hpp"

namespace testsupport {

inline std::string node_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "e%02zu", i);
    return buf;
}

inline evorag::graph::CoOccurrenceGraph make_graph(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
    const std::vector<int>& weights = {}) {
    evorag::graph::CoOccurrenceGraph g;
    for (std::size_t i = 0; i < n; ++i) g.nodes.push_back(node_name(i));
    std::sort(g.nodes.begin(), g.nodes.end());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        std::string a = node_name(edges[e].first);
        std::string b = node_name(edges[e].second);
        if (b < a) std::swap(a, b);
        g.edges[{a, b}] += weights.empty() ? 1 : weights[e];
    }
    return g;
}

// Dense-matrix modularity: Q = (1/2m) * sum_ij (A_ij - r*k_i*k_j/2m) d(ci,cj).
// Deliberately a different formula route than the implementation uses.
inline double oracle_modularity(const evorag::graph::CoOccurrenceGraph& g,
                                const std::vector<std::size_t>& assignment, double resolution) {
    std::size_t n = g.nodes.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[g.nodes[i]] = i;

    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (const auto& [pair, w] : g.edges) {
        std::size_t i = index.at(pair.first);
        std::size_t j = index.at(pair.second);
        a[i][j] += w;
        a[j][i] += w;
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            k[i] += a[i][j];
            two_m += a[i][j];
        }
    if (two_m == 0.0) return 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (assignment[i] == assignment[j])
                q += a[i][j] - resolution * k[i] * k[j] / two_m;
    return q / two_m;
}

// Visits every set partition of n items as a restricted-growth string.
inline void for_each_partition(std::size_t n,
                               const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> rgs(n, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t max_used) {
        if (i == n) {
            fn(rgs);
            return;
        }
        for (std::size_t c = 0; c <= max_used + 1 && c <= i; ++c) {
            rgs[i] = c;
            rec(i + 1, std::max(max_used, c));
        }
    };
    if (n == 0) return;
    rgs[0] = 0;
    rec(1, 0);
}

inline double best_partition_modularity(const evorag::graph::CoOccurrenceGraph& g,
                                        double resolution) {
    double best = -1e18;
    for_each_partition(g.nodes.size(), [&](const std::vector<std::size_t>& assignment) {
        best = std::max(best, oracle_modularity(g, assignment, resolution));
    });
    return best;
}

// Small deterministic generator for property tests.
class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : state_(seed * 2654435761u + 1) {}
    std::uint64_t next() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return state_;
    }
    std::size_t below(std::size_t bound) { return bound ? next() % bound : 0; }

private:
    std::uint64_t state_;
};

// Fixture graphs for clustering checks: name, node count, edge list.
struct FixtureGraph {
    std::string name;
    std::size_t n;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

inline std::vector<FixtureGraph> leiden_fixture_graphs() {
    std::vector<FixtureGraph> graphs;
    graphs.push_back({"single_edge", 2, {{0, 1}}});
    graphs.push_back({"triangle", 3, {{0, 1}, {1, 2}, {0, 2}}});
    graphs.push_back({"k4", 4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}});
    graphs.push_back({"path5", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}});
    graphs.push_back({"cycle6", 6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}});
    graphs.push_back({"star8", 8, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}}});
    graphs.push_back({"k23", 5, {{0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4}}});
    graphs.push_back(
        {"two_triangles", 6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}});
    graphs.push_back({"bridged_triangles",
                      6,
                      {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}}});
    graphs.push_back({"two_bridged_k4",
                      8,
                      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
                       {4, 5}, {4, 6}, {4, 7}, {5, 6}, {5, 7}, {6, 7},
                       {3, 4}}});
    graphs.push_back({"square_diag", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}}});
    graphs.push_back({"clique7",
                      7,
                      {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6},
                       {1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6},
                       {2, 3}, {2, 4}, {2, 5}, {2, 6},
                       {3, 4}, {3, 5}, {3, 6},
                       {4, 5}, {4, 6},
                       {5, 6}}});
    return graphs;
}

inline evorag::graph::CoOccurrenceGraph random_graph(std::size_t n, std::size_t target_edges,
                                                     std::uint64_t seed) {
    TestRng rng(seed);
    std::set<std::pair<std::size_t, std::size_t>> edges;
    while (edges.size() < target_edges) {
        std::size_t a = rng.below(n);
        std::size_t b = rng.below(n);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        edges.insert({a, b});
    }
    return make_graph(n, {edges.begin(), edges.end()});
}

} // namespace testsupport
