#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evorag/extract/keywords.hpp"
#include "evorag/graph/hetero_graph.hpp"
#include "evorag/ingest/tokenizer.hpp"
#include "evorag/llm/backend.hpp"
#include "evorag/llm/prompts.hpp"
#include "evorag/retrieval/vector_search.hpp"

namespace evorag::retrieval {

// One fact in the working evidence. Facts backed by a graph node carry its
// node_id; facts injected by subgraph refinement are flagged inferred and
// never touch the persisted index.
struct EvidenceTriple {
    std::string subject;
    std::string predicate;
    std::string object;
    std::string node_id;   // empty for inferred triples
    bool inferred = false;
};

struct EvidenceSubgraph {
    std::vector<ScoredNode> seeds;        // descending score, ties by node_id
    std::set<std::string> expansion;      // 1-hop neighbors, disjoint from seeds
    std::vector<EvidenceTriple> triples;  // working fact set
    std::string rendered_evidence;

    bool contains_node(const std::string& node_id) const {
        for (const auto& s : seeds)
            if (s.node_id == node_id) return true;
        return expansion.count(node_id) > 0;
    }

    std::vector<std::string> seed_ids() const {
        std::vector<std::string> ids;
        ids.reserve(seeds.size());
        for (const auto& s : seeds) ids.push_back(s.node_id);
        return ids;
    }
};

struct RetrievalOptions {
    std::size_t top_k = 5;
    bool use_keyword_expansion = false;
    int max_keywords = 10;
    bool per_kind_top_k = false;   // alternative: top_k per node kind
    std::size_t evidence_budget = 4096;   // tokens
};

namespace detail {

inline std::string triple_render_line(const EvidenceTriple& t) {
    std::string line = extract::triple_line(t.subject, t.predicate, t.object);
    if (t.inferred) line += " [inferred]";
    return line;
}

} // namespace detail

// Deterministic text block: community summaries first, then triple lines,
// then chunk passages. Chunks orderd by seed score (expansion chunks last)
// and dropped from the end until the token budget holds.
inline std::string render_evidence(const EvidenceSubgraph& ev, const graph::HeteroGraph& g,
                                   std::size_t token_budget,
                                   const ingest::Tokenizer& tokenizer =
                                       ingest::default_tokenizer()) {
    std::vector<std::string> community_lines;
    std::vector<std::string> chunk_order;   // chunk node ids, best first
    std::set<std::string> chunk_seen;

    auto consider = [&](const std::string& node_id) {
        switch (graph::HeteroGraph::kind_of(node_id)) {
        case graph::NodeKind::community: {
            auto it = g.communities().find(graph::HeteroGraph::local_id(node_id));
            if (it != g.communities().end())
                community_lines.push_back(it->second.community_id + ": " + it->second.summary);
            break;
        }
        case graph::NodeKind::chunk:
            if (chunk_seen.insert(node_id).second) chunk_order.push_back(node_id);
            break;
        default: break;
        }
    };
    for (const auto& s : ev.seeds) consider(s.node_id);
    for (const auto& id : ev.expansion) consider(id);
    std::sort(community_lines.begin(), community_lines.end());

    std::vector<std::string> fact_lines;
    for (const auto& t : ev.triples) fact_lines.push_back(detail::triple_render_line(t));
    std::sort(fact_lines.begin(), fact_lines.end());
    fact_lines.erase(std::unique(fact_lines.begin(), fact_lines.end()), fact_lines.end());

    auto assemble = [&](std::size_t chunk_count) {
        std::string out;
        if (!community_lines.empty()) {
            out += "Community summaries:\n";
            for (const auto& line : community_lines) out += line + "\n";
        }
        if (!fact_lines.empty()) {
            if (!out.empty()) out += "\n";
            out += "Facts:\n";
            for (const auto& line : fact_lines) out += line + "\n";
        }
        if (chunk_count > 0) {
            if (!out.empty()) out += "\n";
            out += "Passages:\n";
            for (std::size_t i = 0; i < chunk_count; ++i) {
                auto it = g.chunks().find(graph::HeteroGraph::local_id(chunk_order[i]));
                if (it != g.chunks().end())
                    out += "[" + it->second.chunk_id + "] " + it->second.text + "\n";
            }
        }
        return out;
    };

    std::size_t keep = chunk_order.size();
    std::string out = assemble(keep);
    while (keep > 0 && tokenizer.count_tokens(out) > token_budget) {
        --keep;
        out = assemble(keep);
    }
    return out;
}

// Hybrid retrieval: vector top-k seeding over the three retrievable node
// kinds, then one hop along typed edges (triplet -> its chunk and its
// entities' other triplets; community -> member entities' triplets; chunk ->
// its triplets).
inline EvidenceSubgraph retrieve_subgraph(const std::string& query, const graph::HeteroGraph& g,
                                          llm::Backend& backend,
                                          const llm::PromptLibrary& prompts,
                                          const RetrievalOptions& options = {}) {
    if (g.embeddings().empty()) throw EmptyIndex();

    std::vector<std::string> keywords{query};
    if (options.use_keyword_expansion)
        keywords = extract::expand_keywords(query, options.max_keywords, backend, prompts);

    std::vector<llm::EmbeddingVector> query_vectors;
    query_vectors.reserve(keywords.size());
    for (const auto& k : keywords) query_vectors.push_back(backend.embed(k));

    EvidenceSubgraph ev;
    if (options.per_kind_top_k) {
        for (graph::NodeKind kind : retrievable_kinds()) {
            auto scored = detail::score_all(query_vectors, g, {kind});
            detail::sort_and_clamp(scored, options.top_k);
            ev.seeds.insert(ev.seeds.end(), scored.begin(), scored.end());
        }
        std::sort(ev.seeds.begin(), ev.seeds.end(), [](const ScoredNode& a, const ScoredNode& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.node_id < b.node_id;
        });
    } else {
        auto scored = detail::score_all(query_vectors, g, retrievable_kinds());
        detail::sort_and_clamp(scored, options.top_k);
        ev.seeds = std::move(scored);
    }

    std::set<std::string> seed_ids;
    for (const auto& s : ev.seeds) seed_ids.insert(s.node_id);

    auto entity_triplets = [&](const std::set<std::string>& entity_keys,
                               std::set<std::string>& out) {
        for (const auto& [id, t] : g.triplets()) {
            if (entity_keys.count(extract::canonical_key(t.subject)) ||
                entity_keys.count(extract::canonical_key(t.object)))
                out.insert(graph::HeteroGraph::triplet_node_id(id));
        }
    };

    for (const auto& s : ev.seeds) {
        std::string local = graph::HeteroGraph::local_id(s.node_id);
        switch (s.kind) {
        case graph::NodeKind::triplet: {
            auto it = g.triplets().find(local);
            if (it == g.triplets().end()) break;
            ev.expansion.insert(graph::HeteroGraph::chunk_node_id(it->second.source_chunk));
            entity_triplets({extract::canonical_key(it->second.subject),
                             extract::canonical_key(it->second.object)},
                            ev.expansion);
            break;
        }
        case graph::NodeKind::community: {
            auto it = g.communities().find(local);
            if (it != g.communities().end()) entity_triplets(it->second.members, ev.expansion);
            break;
        }
        case graph::NodeKind::chunk: {
            for (const auto& [id, t] : g.triplets())
                if (t.source_chunk == local)
                    ev.expansion.insert(graph::HeteroGraph::triplet_node_id(id));
            break;
        }
        default: break;
        }
    }
    for (const auto& id : seed_ids) ev.expansion.erase(id);

    std::set<std::string> triplet_nodes;
    for (const auto& id : seed_ids)
        if (graph::HeteroGraph::kind_of(id) == graph::NodeKind::triplet) triplet_nodes.insert(id);
    for (const auto& id : ev.expansion)
        if (graph::HeteroGraph::kind_of(id) == graph::NodeKind::triplet) triplet_nodes.insert(id);
    for (const auto& node_id : triplet_nodes) {
        auto it = g.triplets().find(graph::HeteroGraph::local_id(node_id));
        if (it == g.triplets().end()) continue;
        ev.triples.push_back(
            {it->second.subject, it->second.predicate, it->second.object, node_id, false});
    }

    ev.rendered_evidence = render_evidence(ev, g, options.evidence_budget);
    return ev;
}

} // namespace evorag::retrieval
