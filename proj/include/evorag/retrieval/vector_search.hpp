#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/graph/hetero_graph.hpp"
#include "evorag/llm/chat.hpp"

namespace evorag::retrieval {

struct ScoredNode {
    std::string node_id;
    graph::NodeKind kind = graph::NodeKind::chunk;
    double score = 0.0;
};

inline double cosine(const llm::EmbeddingVector& q, const graph::StoredEmbedding& v) {
    double dot = 0.0, nq = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        dot += q.values[i] * v[i];
        nq += q.values[i] * q.values[i];
        nv += static_cast<double>(v[i]) * v[i];
    }
    if (nq == 0.0 || nv == 0.0) return 0.0;
    return dot / std::sqrt(nq * nv);
}

inline const std::set<graph::NodeKind>& retrievable_kinds() {
    static const std::set<graph::NodeKind> kinds = {
        graph::NodeKind::chunk, graph::NodeKind::triplet, graph::NodeKind::community};
    return kinds;
}

namespace detail {

// Exact scores with max-pooling across several query vectors.
inline std::vector<ScoredNode> score_all(const std::vector<llm::EmbeddingVector>& queries,
                                         const graph::HeteroGraph& g,
                                         const std::set<graph::NodeKind>& kinds) {
    std::vector<ScoredNode> scored;
    for (const auto& [node_id, vec] : g.embeddings()) {
        graph::NodeKind kind = graph::HeteroGraph::kind_of(node_id);
        if (!kinds.count(kind)) continue;
        double best = -2.0;
        for (const auto& q : queries) best = std::max(best, cosine(q, vec));
        scored.push_back({node_id, kind, best});
    }
    return scored;
}

inline void sort_and_clamp(std::vector<ScoredNode>& scored, std::size_t top_k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredNode& a, const ScoredNode& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node_id < b.node_id;
    });
    if (scored.size() > top_k) scored.resize(top_k);
}

} // namespace detail

// Exact brute-force cosine top-k over every embedded node of the requested
// kinds. Ties break by node_id, so results are stable.
inline std::vector<ScoredNode> vector_search(const llm::EmbeddingVector& query,
                                             const graph::HeteroGraph& g, std::size_t top_k = 5,
                                             const std::set<graph::NodeKind>& kinds =
                                                 retrievable_kinds()) {
    if (g.embedding_dim() != 0 && query.dim() != g.embedding_dim())
        throw DimensionMismatch(g.embedding_dim(), query.dim());
    std::vector<ScoredNode> scored = detail::score_all({query}, g, kinds);
    if (scored.empty()) throw EmptyIndex();
    detail::sort_and_clamp(scored, top_k);
    return scored;
}

} // namespace evorag::retrieval
