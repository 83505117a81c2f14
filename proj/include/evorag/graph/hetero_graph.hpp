#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/extract/records.hpp"
#include "evorag/ingest/chunker.hpp"
#include "evorag/llm/chat.hpp"

namespace evorag::graph {

enum class NodeKind { chunk, entity, triplet, community };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::chunk: return "chunk";
    case NodeKind::entity: return "entity";
    case NodeKind::triplet: return "triplet";
    case NodeKind::community: return "community";
    }
    return "?";
}

enum class EdgeKind { open_rel, mentioned_in, summary_for };

inline const char* edge_kind_name(EdgeKind k) {
    switch (k) {
    case EdgeKind::open_rel: return "OpenRel";
    case EdgeKind::mentioned_in: return "MentionedIn";
    case EdgeKind::summary_for: return "SummaryFor";
    }
    return "?";
}

struct Edge {
    EdgeKind kind;
    std::string source;
    std::string target;
    std::string label;   // predicate for OpenRel, empty otherwise

    bool operator<(const Edge& other) const {
        if (kind != other.kind) return kind < other.kind;
        if (source != other.source) return source < other.source;
        if (target != other.target) return target < other.target;
        return label < other.label;
    }
    bool operator==(const Edge& other) const {
        return kind == other.kind && source == other.source && target == other.target &&
               label == other.label;
    }
};

struct CommunityRecord {
    std::string community_id;
    int level = 0;
    std::set<std::string> members;   // canonical entity keys
    std::string summary;
    std::string parent;              // empty for top-level communities
};

// Embeddings are stored at float32 precision, matching the on-disk format so
// that a save/load round trip is bit-exact and scores never drift.
using StoredEmbedding = std::vector<float>;

inline StoredEmbedding quantize(const llm::EmbeddingVector& v) {
    StoredEmbedding out(v.values.size());
    for (std::size_t i = 0; i < v.values.size(); ++i)
        out[i] = static_cast<float>(v.values[i]);
    return out;
}

class HeteroGraph {
public:
    static std::string chunk_node_id(const std::string& chunk_id) { return "chunk:" + chunk_id; }
    static std::string entity_node_id(const std::string& key) { return "entity:" + key; }
    static std::string triplet_node_id(const std::string& triplet_id) {
        return "triplet:" + triplet_id;
    }
    static std::string community_node_id(const std::string& community_id) {
        return "community:" + community_id;
    }

    std::string upsert_chunk(const ingest::Chunk& chunk) {
        chunks_.emplace(chunk.chunk_id, chunk);
        return chunk_node_id(chunk.chunk_id);
    }

    // Inserts a triplet node, auto-inserting its endpoint entities, one
    // MentionedIn edge to the source chunk and one OpenRel edge between the
    // endpoints. Idempotent on identical input.
    std::string upsert_triplet(const extract::TripletRecord& t) {
        if (!chunks_.count(t.source_chunk))
            throw DanglingReference("triplet references absent chunk: " + t.source_chunk);
        std::string skey = extract::canonical_key(t.subject);
        std::string okey = extract::canonical_key(t.object);
        if (skey.empty() || okey.empty())
            throw DanglingReference("triplet endpoint is empty");

        std::string identity =
            skey + '\x1f' + extract::canonical_key(t.predicate) + '\x1f' + okey + '\x1f' +
            t.source_chunk;
        auto found = triplet_identity_.find(identity);
        if (found != triplet_identity_.end()) return triplet_node_id(found->second);

        touch_entity(skey, t.subject, t.subject_type);
        touch_entity(okey, t.object, t.object_type);

        char buf[16];
        std::snprintf(buf, sizeof(buf), "t%08zu", next_triplet_);
        ++next_triplet_;
        std::string id(buf);
        triplets_.emplace(id, t);
        triplet_identity_.emplace(identity, id);
        edges_.insert({EdgeKind::mentioned_in, triplet_node_id(id), chunk_node_id(t.source_chunk),
                       ""});
        edges_.insert(
            {EdgeKind::open_rel, entity_node_id(skey), entity_node_id(okey), t.predicate});
        return triplet_node_id(id);
    }

    std::string upsert_community(const CommunityRecord& community) {
        if (community.members.empty())
            throw DanglingReference("community " + community.community_id + " has no members");
        for (const auto& m : community.members)
            if (!entities_.count(m))
                throw DanglingReference("community " + community.community_id +
                                        " references absent entity: " + m);
        if (!community.parent.empty() && !communities_.count(community.parent))
            throw DanglingReference("community " + community.community_id +
                                    " references absent parent: " + community.parent);
        communities_.emplace(community.community_id, community);
        for (const auto& m : community.members)
            edges_.insert({EdgeKind::summary_for, community_node_id(community.community_id),
                           entity_node_id(m), ""});
        return community_node_id(community.community_id);
    }

    // Merges extracted metadata into an already-present entity; entities enter
    // the graph only through triplet endpoints.
    void enrich_entity(const extract::EntityRecord& record) {
        auto it = entities_.find(extract::canonical_key(record.name));
        if (it == entities_.end()) return;
        auto& e = it->second;
        if (e.entity_type.empty()) e.entity_type = record.entity_type;
        if (e.description.empty()) e.description = record.description;
        if (record.name != e.name) e.aliases.insert(record.name);
        for (const auto& a : record.aliases)
            if (a != e.name) e.aliases.insert(a);
    }

    void set_embedding(const std::string& node_id, const llm::EmbeddingVector& v) {
        if (!has_node(node_id))
            throw DanglingReference("embedding for absent node: " + node_id);
        if (embedding_dim_ == 0) embedding_dim_ = v.dim();
        else if (v.dim() != embedding_dim_)
            throw DimensionMismatch(embedding_dim_, v.dim());
        embeddings_[node_id] = quantize(v);
    }

    bool has_node(const std::string& node_id) const {
        auto sep = node_id.find(':');
        if (sep == std::string::npos) return false;
        std::string kind = node_id.substr(0, sep);
        std::string rest = node_id.substr(sep + 1);
        if (kind == "chunk") return chunks_.count(rest) > 0;
        if (kind == "entity") return entities_.count(rest) > 0;
        if (kind == "triplet") return triplets_.count(rest) > 0;
        if (kind == "community") return communities_.count(rest) > 0;
        return false;
    }

    static NodeKind kind_of(const std::string& node_id) {
        if (node_id.rfind("chunk:", 0) == 0) return NodeKind::chunk;
        if (node_id.rfind("entity:", 0) == 0) return NodeKind::entity;
        if (node_id.rfind("triplet:", 0) == 0) return NodeKind::triplet;
        return NodeKind::community;
    }

    static std::string local_id(const std::string& node_id) {
        auto sep = node_id.find(':');
        return sep == std::string::npos ? node_id : node_id.substr(sep + 1);
    }

    const std::map<std::string, ingest::Chunk>& chunks() const { return chunks_; }
    const std::map<std::string, extract::EntityRecord>& entities() const { return entities_; }
    const std::map<std::string, extract::TripletRecord>& triplets() const { return triplets_; }
    const std::map<std::string, CommunityRecord>& communities() const { return communities_; }
    const std::set<Edge>& edges() const { return edges_; }
    const std::map<std::string, StoredEmbedding>& embeddings() const { return embeddings_; }
    std::size_t embedding_dim() const { return embedding_dim_; }

    bool empty() const {
        return chunks_.empty() && entities_.empty() && triplets_.empty() && communities_.empty();
    }

private:
    void touch_entity(const std::string& key, const std::string& display,
                      const std::string& type) {
        auto it = entities_.find(key);
        if (it == entities_.end()) {
            extract::EntityRecord rec;
            rec.name = extract::collapse_whitespace(display);
            rec.entity_type = type;
            entities_.emplace(key, std::move(rec));
        } else {
            std::string collapsed = extract::collapse_whitespace(display);
            if (collapsed != it->second.name) it->second.aliases.insert(collapsed);
            if (it->second.entity_type.empty()) it->second.entity_type = type;
        }
    }

    std::map<std::string, ingest::Chunk> chunks_;
    std::map<std::string, extract::EntityRecord> entities_;
    std::map<std::string, extract::TripletRecord> triplets_;
    std::map<std::string, CommunityRecord> communities_;
    std::set<Edge> edges_;
    std::map<std::string, StoredEmbedding> embeddings_;
    std::map<std::string, std::string> triplet_identity_;
    std::size_t next_triplet_ = 0;
    std::size_t embedding_dim_ = 0;

    friend struct GraphRestorer;
};

// Low-level insertion used by the index loader; skips the invariant-enforcing
// upsert paths because the record files are re-validated wholesale afterward.
struct GraphRestorer {
    HeteroGraph& g;

    void chunk(const ingest::Chunk& c) { g.chunks_[c.chunk_id] = c; }
    void entity(const std::string& key, extract::EntityRecord e) {
        g.entities_[key] = std::move(e);
    }
    void triplet(const std::string& id, extract::TripletRecord t) {
        std::string identity = extract::canonical_key(t.subject) + '\x1f' +
                               extract::canonical_key(t.predicate) + '\x1f' +
                               extract::canonical_key(t.object) + '\x1f' + t.source_chunk;
        g.triplet_identity_.emplace(identity, id);
        if (id.size() > 1) {
            std::size_t n = std::strtoull(id.c_str() + 1, nullptr, 10);
            if (n + 1 > g.next_triplet_) g.next_triplet_ = n + 1;
        }
        g.triplets_[id] = std::move(t);
    }
    void community(CommunityRecord c) { g.communities_[c.community_id] = std::move(c); }
    void edge(Edge e) { g.edges_.insert(std::move(e)); }
    void embedding(const std::string& node_id, StoredEmbedding v) {
        if (g.embedding_dim_ == 0) g.embedding_dim_ = v.size();
        g.embeddings_[node_id] = std::move(v);
    }
};

// Full referential-integrity sweep; returns one message per violation.
inline std::vector<std::string> validate(const HeteroGraph& g, bool expect_embeddings = false) {
    std::vector<std::string> issues;
    auto complain = [&](std::string msg) { issues.push_back(std::move(msg)); };

    std::map<std::string, int> mentioned_in_count;
    std::map<std::string, int> summary_for_count;

    for (const auto& e : g.edges()) {
        switch (e.kind) {
        case EdgeKind::mentioned_in:
            if (HeteroGraph::kind_of(e.source) != NodeKind::triplet || !g.has_node(e.source))
                complain("MentionedIn source is not an existing triplet: " + e.source);
            if (HeteroGraph::kind_of(e.target) != NodeKind::chunk || !g.has_node(e.target))
                complain("MentionedIn target is not an existing chunk: " + e.target);
            mentioned_in_count[e.source]++;
            break;
        case EdgeKind::summary_for:
            if (HeteroGraph::kind_of(e.source) != NodeKind::community || !g.has_node(e.source))
                complain("SummaryFor source is not an existing community: " + e.source);
            if (HeteroGraph::kind_of(e.target) != NodeKind::entity || !g.has_node(e.target))
                complain("SummaryFor target is not an existing entity: " + e.target);
            summary_for_count[e.source]++;
            break;
        case EdgeKind::open_rel:
            if (HeteroGraph::kind_of(e.source) != NodeKind::entity || !g.has_node(e.source))
                complain("OpenRel source is not an existing entity: " + e.source);
            if (HeteroGraph::kind_of(e.target) != NodeKind::entity || !g.has_node(e.target))
                complain("OpenRel target is not an existing entity: " + e.target);
            break;
        }
    }

    for (const auto& [id, t] : g.triplets()) {
        std::string node = HeteroGraph::triplet_node_id(id);
        if (mentioned_in_count[node] != 1)
            complain("triplet " + id + " has " + std::to_string(mentioned_in_count[node]) +
                     " MentionedIn edges, expected 1");
        if (!g.chunks().count(t.source_chunk))
            complain("triplet " + id + " references absent chunk " + t.source_chunk);
        if (!g.entities().count(extract::canonical_key(t.subject)))
            complain("triplet " + id + " subject has no entity node");
        if (!g.entities().count(extract::canonical_key(t.object)))
            complain("triplet " + id + " object has no entity node");
    }

    for (const auto& [id, c] : g.communities()) {
        std::string node = HeteroGraph::community_node_id(id);
        if (summary_for_count[node] != static_cast<int>(c.members.size()))
            complain("community " + id + " has " + std::to_string(summary_for_count[node]) +
                     " SummaryFor edges, expected " + std::to_string(c.members.size()));
        for (const auto& m : c.members)
            if (!g.entities().count(m))
                complain("community " + id + " member has no entity node: " + m);
        if (!c.parent.empty()) {
            auto parent = g.communities().find(c.parent);
            if (parent == g.communities().end()) {
                complain("community " + id + " references absent parent " + c.parent);
            } else {
                for (const auto& m : c.members)
                    if (!parent->second.members.count(m))
                        complain("community " + id + " member " + m + " missing from parent");
            }
        }
    }

    for (const auto& [node_id, vec] : g.embeddings()) {
        if (!g.has_node(node_id)) complain("embedding for absent node " + node_id);
        if (HeteroGraph::kind_of(node_id) == NodeKind::entity)
            complain("entity node must not be embedded: " + node_id);
        if (vec.size() != g.embedding_dim())
            complain("embedding dimension mismatch for " + node_id);
        for (float v : vec)
            if (!std::isfinite(v)) complain("non-finite embedding value in " + node_id);
    }

    if (expect_embeddings) {
        for (const auto& [id, c] : g.chunks())
            if (!g.embeddings().count(HeteroGraph::chunk_node_id(id)))
                complain("chunk " + id + " has no embedding");
        for (const auto& [id, t] : g.triplets())
            if (!g.embeddings().count(HeteroGraph::triplet_node_id(id)))
                complain("triplet " + id + " has no embedding");
        for (const auto& [id, c] : g.communities())
            if (!g.embeddings().count(HeteroGraph::community_node_id(id)))
                complain("community " + id + " has no embedding");
    }
    return issues;
}

inline bool graph_equal(const HeteroGraph& a, const HeteroGraph& b) {
    auto chunks_equal = [](const ingest::Chunk& x, const ingest::Chunk& y) {
        return x.chunk_id == y.chunk_id && x.doc_id == y.doc_id && x.text == y.text &&
               x.token_start == y.token_start && x.token_count == y.token_count;
    };
    if (a.chunks().size() != b.chunks().size()) return false;
    for (auto ia = a.chunks().begin(), ib = b.chunks().begin(); ia != a.chunks().end();
         ++ia, ++ib)
        if (ia->first != ib->first || !chunks_equal(ia->second, ib->second)) return false;

    auto entity_equal = [](const extract::EntityRecord& x, const extract::EntityRecord& y) {
        return x.name == y.name && x.entity_type == y.entity_type &&
               x.description == y.description && x.aliases == y.aliases;
    };
    if (a.entities().size() != b.entities().size()) return false;
    for (auto ia = a.entities().begin(), ib = b.entities().begin(); ia != a.entities().end();
         ++ia, ++ib)
        if (ia->first != ib->first || !entity_equal(ia->second, ib->second)) return false;

    auto triplet_equal = [](const extract::TripletRecord& x, const extract::TripletRecord& y) {
        return x.subject == y.subject && x.predicate == y.predicate && x.object == y.object &&
               x.subject_type == y.subject_type && x.object_type == y.object_type &&
               x.description == y.description && x.source_chunk == y.source_chunk;
    };
    if (a.triplets().size() != b.triplets().size()) return false;
    for (auto ia = a.triplets().begin(), ib = b.triplets().begin(); ia != a.triplets().end();
         ++ia, ++ib)
        if (ia->first != ib->first || !triplet_equal(ia->second, ib->second)) return false;

    auto community_equal = [](const CommunityRecord& x, const CommunityRecord& y) {
        return x.community_id == y.community_id && x.level == y.level && x.members == y.members &&
               x.summary == y.summary && x.parent == y.parent;
    };
    if (a.communities().size() != b.communities().size()) return false;
    for (auto ia = a.communities().begin(), ib = b.communities().begin();
         ia != a.communities().end(); ++ia, ++ib)
        if (ia->first != ib->first || !community_equal(ia->second, ib->second)) return false;

    if (a.edges() != b.edges()) return false;

    // bit-exact embedding comparison
    if (a.embeddings().size() != b.embeddings().size()) return false;
    for (auto ia = a.embeddings().begin(), ib = b.embeddings().begin();
         ia != a.embeddings().end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second.size() != ib->second.size()) return false;
        for (std::size_t i = 0; i < ia->second.size(); ++i) {
            std::uint32_t xa, xb;
            static_assert(sizeof(float) == sizeof(std::uint32_t));
            std::memcpy(&xa, &ia->second[i], 4);
            std::memcpy(&xb, &ib->second[i], 4);
            if (xa != xb) return false;
        }
    }
    return true;
}

} // namespace evorag::graph
