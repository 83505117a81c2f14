#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "evorag/graph/cooccurrence.hpp"
#include "evorag/graph/hetero_graph.hpp"
#include "evorag/llm/scripted_backend.hpp"   // detail::splitmix64 / fnv1a64

namespace evorag::graph {

struct LeidenParams {
    std::size_t max_cluster_size = 5;
    double resolution = 1.0;
    std::uint64_t seed = 0;
    // independent seeded runs; the best-modularity partition wins, so small
    // graphs reliably reach the global optimum while staying deterministic
    int restarts = 16;
};

namespace leiden_detail {

struct IndexedGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;   // off-diagonal neighbors
    std::vector<double> self_weight;   // A_ii
    std::vector<double> strength;      // k_i = sum_j A_ij
    double two_m = 0.0;                // sum_ij A_ij
};

inline IndexedGraph index_graph(const CoOccurrenceGraph& g,
                                std::map<std::string, std::size_t>& key_to_index) {
    IndexedGraph ig;
    ig.n = g.nodes.size();
    ig.adj.resize(ig.n);
    ig.self_weight.assign(ig.n, 0.0);
    ig.strength.assign(ig.n, 0.0);
    key_to_index.clear();
    for (std::size_t i = 0; i < g.nodes.size(); ++i) key_to_index[g.nodes[i]] = i;
    for (const auto& [pair, w] : g.edges) {
        std::size_t a = key_to_index.at(pair.first);
        std::size_t b = key_to_index.at(pair.second);
        double weight = static_cast<double>(w);
        ig.adj[a].push_back({b, weight});
        ig.adj[b].push_back({a, weight});
        ig.strength[a] += weight;
        ig.strength[b] += weight;
        ig.two_m += 2.0 * weight;
    }
    return ig;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x853c49e6748fea9bull) {}
    std::uint64_t next() { return state_ = llm::detail::splitmix64(state_); }
    std::size_t below(std::size_t bound) { return bound ? next() % bound : 0; }

    void shuffle(std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t state_;
};

// Queue-based local moving on modularity at the given resolution. Nodes move
// to the neighboring (or empty) community with the highest gain; neighbors of
// a moved node are revisited until no positive move remains.
inline bool local_move(const IndexedGraph& g, std::vector<std::size_t>& comm, double resolution,
                       Rng& rng) {
    const double eps = 1e-12;
    std::size_t n = g.n;
    std::vector<double> comm_tot(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) comm_tot[comm[v]] += g.strength[v];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::deque<std::size_t> queue(order.begin(), order.end());
    std::vector<bool> queued(n, true);
    std::vector<double> weight_to(n, 0.0);
    bool any_moved = false;

    // A community index with zero mass doubles as "empty community" target.
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        queued[v] = false;

        std::size_t old_comm = comm[v];
        std::vector<std::size_t> touched;
        for (const auto& [u, w] : g.adj[v]) {
            if (weight_to[comm[u]] == 0.0) touched.push_back(comm[u]);
            weight_to[comm[u]] += w;
        }

        // remove v
        comm_tot[old_comm] -= g.strength[v];

        std::size_t empty_comm = old_comm;
        if (comm_tot[old_comm] > 0.0) {
            // find a free community slot for the "move to empty" option
            for (std::size_t c = 0; c < n; ++c)
                if (comm_tot[c] == 0.0) { empty_comm = c; break; }
        }

        auto insert_gain = [&](std::size_t c) {
            double k_vc = weight_to[c];
            double tot = comm_tot[c];
            if (g.two_m == 0.0) return 0.0;
            return 2.0 * k_vc / g.two_m -
                   resolution * 2.0 * g.strength[v] * tot / (g.two_m * g.two_m);
        };

        std::size_t best = old_comm;
        double best_gain = insert_gain(old_comm);
        auto consider = [&](std::size_t c) {
            double gain = insert_gain(c);
            if (gain > best_gain + eps || (gain > best_gain - eps && c < best &&
                                           best != old_comm && c != old_comm)) {
                best = c;
                best_gain = gain;
            }
        };
        for (std::size_t c : touched)
            if (c != old_comm) consider(c);
        if (empty_comm != old_comm) consider(empty_comm);

        comm[v] = best;
        comm_tot[best] += g.strength[v];
        for (std::size_t c : touched) weight_to[c] = 0.0;
        weight_to[empty_comm] = 0.0;

        if (best != old_comm) {
            any_moved = true;
            for (const auto& [u, w] : g.adj[v]) {
                (void)w;
                if (comm[u] != best && !queued[u]) {
                    queue.push_back(u);
                    queued[u] = true;
                }
            }
        }
    }
    return any_moved;
}

// Refinement phase: inside every community of `comm`, nodes start as
// singletons and only well-connected singletons merge into well-connected
// sub-communities (deterministic argmax in place of the randomized pick).
inline std::vector<std::size_t> refine(const IndexedGraph& g, const std::vector<std::size_t>& comm,
                                       double resolution, Rng& rng) {
    std::size_t n = g.n;
    std::vector<std::size_t> refined(n);
    std::iota(refined.begin(), refined.end(), 0);
    if (g.two_m == 0.0) return refined;

    std::vector<double> comm_tot(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) comm_tot[comm[v]] += g.strength[v];

    // per-node connectivity to the rest of its community
    std::vector<double> within(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (const auto& [u, w] : g.adj[v])
            if (comm[u] == comm[v]) within[v] += w;

    std::vector<double> ref_tot(g.strength);         // K_D per refined community
    std::vector<double> ref_within(within);          // sum of member `within`
    std::vector<double> ref_internal(n, 0.0);        // off-diagonal weight inside D
    std::vector<std::size_t> ref_size(n, 1);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<double> weight_to(n, 0.0);
    for (std::size_t v : order) {
        if (ref_size[refined[v]] > 1) continue;   // only singletons move
        std::size_t c = comm[v];
        double kc = comm_tot[c];
        if (within[v] <
            resolution * g.strength[v] * (kc - g.strength[v]) / g.two_m)
            continue;   // v itself not well-connected

        std::vector<std::size_t> touched;
        for (const auto& [u, w] : g.adj[v]) {
            if (comm[u] != c || refined[u] == refined[v]) continue;
            if (weight_to[refined[u]] == 0.0) touched.push_back(refined[u]);
            weight_to[refined[u]] += w;
        }

        std::size_t best = refined[v];
        double best_gain = 0.0;
        const double eps = 1e-12;
        for (std::size_t d : touched) {
            // candidate sub-community must be well-connected within C
            double boundary = ref_within[d] - 2.0 * ref_internal[d];
            if (boundary < resolution * ref_tot[d] * (kc - ref_tot[d]) / g.two_m) continue;
            double gain = 2.0 * weight_to[d] / g.two_m -
                          resolution * 2.0 * g.strength[v] * ref_tot[d] / (g.two_m * g.two_m);
            if (gain > best_gain + eps ||
                (gain > best_gain - eps && best != refined[v] && d < best)) {
                best = d;
                best_gain = gain;
            }
        }

        if (best != refined[v]) {
            std::size_t old = refined[v];
            refined[v] = best;
            ref_tot[best] += g.strength[v];
            ref_within[best] += within[v];
            ref_internal[best] += weight_to[best];
            ref_size[best] += 1;
            ref_tot[old] = ref_within[old] = ref_internal[old] = 0.0;
            ref_size[old] = 0;
        }
        for (std::size_t d : touched) weight_to[d] = 0.0;
    }
    return refined;
}

inline std::vector<std::size_t> renumber(std::vector<std::size_t> labels) {
    std::map<std::size_t, std::size_t> mapping;
    for (std::size_t& l : labels) {
        auto it = mapping.find(l);
        if (it == mapping.end()) {
            std::size_t next = mapping.size();
            mapping[l] = next;
            l = next;
        } else {
            l = it->second;
        }
    }
    return labels;
}

inline IndexedGraph aggregate(const IndexedGraph& g, const std::vector<std::size_t>& refined,
                              std::size_t groups) {
    IndexedGraph out;
    out.n = groups;
    out.adj.resize(groups);
    out.self_weight.assign(groups, 0.0);
    out.strength.assign(groups, 0.0);
    out.two_m = g.two_m;

    std::map<std::pair<std::size_t, std::size_t>, double> acc;
    for (std::size_t v = 0; v < g.n; ++v) {
        std::size_t cv = refined[v];
        out.self_weight[cv] += g.self_weight[v];
        out.strength[cv] += g.strength[v];
        for (const auto& [u, w] : g.adj[v]) {
            std::size_t cu = refined[u];
            if (cu == cv) {
                out.self_weight[cv] += w;   // both directions accumulate
            } else if (cv < cu) {
                acc[{cv, cu}] += w;
            }
        }
    }
    for (const auto& [pair, w] : acc) {
        out.adj[pair.first].push_back({pair.second, w});
        out.adj[pair.second].push_back({pair.first, w});
    }
    return out;
}

// Full Leiden loop; returns a flat community assignment over the input nodes,
// renumbered by first appearance.
inline std::vector<std::size_t> leiden_partition(const IndexedGraph& base, double resolution,
                                                 std::uint64_t seed) {
    Rng rng(seed);
    IndexedGraph g = base;
    std::vector<std::size_t> node_of(base.n);   // original node -> current aggregate node
    std::iota(node_of.begin(), node_of.end(), 0);

    std::vector<std::size_t> comm(g.n);
    std::iota(comm.begin(), comm.end(), 0);

    while (true) {
        bool moved = local_move(g, comm, resolution, rng);
        comm = renumber(std::move(comm));
        std::size_t communities = *std::max_element(comm.begin(), comm.end()) + 1;
        if (communities == g.n && g.n > 0) break;   // nothing to aggregate

        std::vector<std::size_t> refined = renumber(refine(g, comm, resolution, rng));
        std::size_t groups = refined.empty()
                                 ? 0
                                 : *std::max_element(refined.begin(), refined.end()) + 1;
        if (groups == g.n && !moved) break;   // converged
        if (groups == g.n) {
            // refinement kept everything apart; aggregate on the partition
            // itself so progress is still made
            refined = comm;
            groups = communities;
        }

        // community of each aggregate node = community of its members
        std::vector<std::size_t> new_comm(groups);
        for (std::size_t v = 0; v < g.n; ++v) new_comm[refined[v]] = comm[v];

        g = aggregate(g, refined, groups);
        for (std::size_t& x : node_of) x = refined[x];
        comm = std::move(new_comm);
    }

    std::vector<std::size_t> flat(base.n);
    for (std::size_t v = 0; v < base.n; ++v) flat[v] = comm[node_of[v]];
    return renumber(std::move(flat));
}

inline double partition_modularity(const IndexedGraph& g, const std::vector<std::size_t>& comm,
                                   double resolution) {
    if (g.two_m == 0.0) return 0.0;
    std::size_t groups = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
    std::vector<double> internal(groups, 0.0), total(groups, 0.0);
    for (std::size_t v = 0; v < g.n; ++v) {
        internal[comm[v]] += g.self_weight[v];
        total[comm[v]] += g.strength[v];
        for (const auto& [u, w] : g.adj[v])
            if (comm[u] == comm[v]) internal[comm[v]] += w;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < groups; ++c)
        q += internal[c] / g.two_m -
             resolution * (total[c] / g.two_m) * (total[c] / g.two_m);
    return q;
}

inline std::vector<std::size_t> leiden_partition_best(const IndexedGraph& base, double resolution,
                                                      std::uint64_t seed, int restarts) {
    std::vector<std::size_t> best;
    double best_q = 0.0;
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        std::uint64_t run_seed = r == 0 ? seed : llm::detail::splitmix64(seed + 0x9e3779b9ull * r);
        std::vector<std::size_t> flat = leiden_partition(base, resolution, run_seed);
        double q = partition_modularity(base, flat, resolution);
        if (best.empty() || q > best_q + 1e-15) {
            best = std::move(flat);
            best_q = q;
        }
    }
    return best;
}

} // namespace leiden_detail

// Modularity of a partition (given as sets of entity keys) at a resolution.
inline double modularity(const CoOccurrenceGraph& g,
                         const std::vector<std::set<std::string>>& parts, double resolution) {
    std::map<std::string, std::size_t> part_of;
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (const auto& key : parts[i]) part_of[key] = i;

    double m = 0.0;
    std::map<std::size_t, double> internal, degree;
    for (const auto& [pair, w] : g.edges) {
        double weight = static_cast<double>(w);
        m += weight;
        auto a = part_of.find(pair.first);
        auto b = part_of.find(pair.second);
        if (a == part_of.end() || b == part_of.end()) continue;
        degree[a->second] += weight;
        degree[b->second] += weight;
        if (a->second == b->second) internal[a->second] += weight;
    }
    if (m == 0.0) return 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        double in = internal.count(i) ? internal[i] : 0.0;
        double tot = degree.count(i) ? degree[i] : 0.0;
        q += in / m - resolution * (tot / (2.0 * m)) * (tot / (2.0 * m));
    }
    return q;
}

namespace leiden_detail {

inline CoOccurrenceGraph induced_subgraph(const CoOccurrenceGraph& g,
                                          const std::set<std::string>& members) {
    CoOccurrenceGraph out;
    out.nodes.assign(members.begin(), members.end());
    for (const auto& [pair, w] : g.edges)
        if (members.count(pair.first) && members.count(pair.second)) out.edges[pair] = w;
    return out;
}

// One Leiden pass over a co-occurrence graph, returning member sets sorted
// canonically (by their lexicographically smallest member).
inline std::vector<std::set<std::string>> partition_keys(const CoOccurrenceGraph& g,
                                                         double resolution, std::uint64_t seed,
                                                         int restarts) {
    std::map<std::string, std::size_t> key_to_index;
    IndexedGraph ig = index_graph(g, key_to_index);
    if (ig.n == 0) return {};
    std::vector<std::size_t> flat = leiden_partition_best(ig, resolution, seed, restarts);
    std::size_t groups = *std::max_element(flat.begin(), flat.end()) + 1;
    std::vector<std::set<std::string>> out(groups);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) out[flat[i]].insert(g.nodes[i]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return *a.begin() < *b.begin();
    });
    return out;
}

} // namespace leiden_detail

// Hierarchical Leiden clustering: a full Leiden pass yields the level-0
// partition; any community over max_cluster_size is re-clustered on its
// induced subgraph at the next level (parent links recorded) until every leaf
// satisfies the bound. A community Leiden refuses to split (e.g. a clique)
// falls back to a deterministic split by sorted entity name.
inline std::vector<CommunityRecord> leiden_cluster(const CoOccurrenceGraph& g,
                                                   const LeidenParams& params = {}) {
    if (params.max_cluster_size < 1)
        throw std::invalid_argument("leiden_cluster: max_cluster_size must be >= 1");

    std::vector<CommunityRecord> records;
    std::vector<std::size_t> level_counter;

    auto next_id = [&](int level) {
        if (level_counter.size() <= static_cast<std::size_t>(level))
            level_counter.resize(level + 1, 0);
        return "c" + std::to_string(level) + "_" + std::to_string(level_counter[level]++);
    };

    struct Pending {
        std::set<std::string> members;
        int level;
        std::string parent;
    };

    std::deque<Pending> work;
    for (auto& part :
         leiden_detail::partition_keys(g, params.resolution, params.seed, params.restarts))
        work.push_back({std::move(part), 0, ""});

    while (!work.empty()) {
        Pending item = std::move(work.front());
        work.pop_front();

        CommunityRecord rec;
        rec.community_id = next_id(item.level);
        rec.level = item.level;
        rec.members = item.members;
        rec.parent = item.parent;
        records.push_back(rec);

        if (item.members.size() <= params.max_cluster_size) continue;

        CoOccurrenceGraph sub = leiden_detail::induced_subgraph(g, item.members);
        std::uint64_t child_seed =
            llm::detail::splitmix64(params.seed ^ llm::detail::fnv1a64(rec.community_id));
        auto parts =
            leiden_detail::partition_keys(sub, params.resolution, child_seed, params.restarts);

        if (parts.size() <= 1) {
            // deterministic fallback: slice sorted members into bound-sized groups
            parts.clear();
            std::vector<std::string> sorted(item.members.begin(), item.members.end());
            for (std::size_t at = 0; at < sorted.size(); at += params.max_cluster_size) {
                std::set<std::string> slice(
                    sorted.begin() + at,
                    sorted.begin() + std::min(at + params.max_cluster_size, sorted.size()));
                parts.push_back(std::move(slice));
            }
        }
        for (auto& part : parts)
            work.push_back({std::move(part), item.level + 1, rec.community_id});
    }
    return records;
}

// The final (leaf) partition of the hierarchy.
inline std::vector<const CommunityRecord*> leaf_communities(
    const std::vector<CommunityRecord>& records) {
    std::set<std::string> parents;
    for (const auto& r : records)
        if (!r.parent.empty()) parents.insert(r.parent);
    std::vector<const CommunityRecord*> leaves;
    for (const auto& r : records)
        if (!parents.count(r.community_id)) leaves.push_back(&r);
    return leaves;
}

} // namespace evorag::graph
