#pragma once

#include <atomic>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/extract/community_summary.hpp"
#include "evorag/extract/extractor.hpp"
#include "evorag/graph/cooccurrence.hpp"
#include "evorag/graph/hetero_graph.hpp"
#include "evorag/graph/leiden.hpp"
#include "evorag/ingest/chunker.hpp"
#include "evorag/ingest/corpus.hpp"

namespace evorag::graph {

struct BuildConfig {
    ingest::ChunkParams chunking;
    extract::ExtractorOptions extractor;
    LeidenParams leiden;
    std::size_t workers = 0;   // 0 = hardware concurrency
};

struct BuildReport {
    std::size_t documents = 0;
    std::size_t chunks_attempted = 0;
    std::size_t chunks_extracted = 0;
    std::size_t chunks_skipped = 0;
    std::size_t entities = 0;
    std::size_t triplets = 0;
    std::size_t communities = 0;
    std::size_t open_rel_edges = 0;
    std::size_t mentioned_in_edges = 0;
    std::size_t summary_for_edges = 0;
    std::size_t embedded_nodes = 0;
    BuildConfig config;

    nlohmann::json to_json() const {
        return {
            {"documents", documents},
            {"chunks_attempted", chunks_attempted},
            {"chunks_extracted", chunks_extracted},
            {"chunks_skipped", chunks_skipped},
            {"entities", entities},
            {"triplets", triplets},
            {"communities", communities},
            {"edges",
             {{"OpenRel", open_rel_edges},
              {"MentionedIn", mentioned_in_edges},
              {"SummaryFor", summary_for_edges}}},
            {"embedded_nodes", embedded_nodes},
            {"config",
             {{"chunk_size", config.chunking.chunk_size},
              {"overlap", config.chunking.overlap},
              {"snap_to_sentence", config.chunking.snap_to_sentence},
              {"max_triplets", config.extractor.max_triplets},
              {"max_cluster_size", config.leiden.max_cluster_size},
              {"resolution", config.leiden.resolution},
              {"seed", config.leiden.seed}}},
        };
    }
};

namespace detail {

// Parallel map over chunk indices; results land in a pre-sized vector so the
// merge order never depends on scheduling.
template <typename Fn>
inline void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

// Triplets rendered into the community-summary input: those fully inside the
// community, falling back to any incident triplet for communities whose
// members never co-occur (e.g. singletons).
inline std::vector<extract::TripletRecord> community_triplets(const HeteroGraph& g,
                                                              const CommunityRecord& c) {
    std::vector<extract::TripletRecord> inside, incident;
    for (const auto& [id, t] : g.triplets()) {
        bool s = c.members.count(extract::canonical_key(t.subject)) > 0;
        bool o = c.members.count(extract::canonical_key(t.object)) > 0;
        if (s && o) inside.push_back(t);
        else if (s || o) incident.push_back(t);
    }
    return inside.empty() ? incident : inside;
}

inline std::string triplet_embedding_text(const extract::TripletRecord& t) {
    return t.subject + " | " + t.predicate + " | " + t.object + " | " + t.description;
}

} // namespace detail

// Offline index construction: chunking, per-chunk triplet extraction,
// co-occurrence graph, hierarchical Leiden, community summaries, then one
// embedding per chunk, triplet and community. Extraction parse failures skip
// the chunk and are tallied; everything else aborts the build.
inline HeteroGraph build_index(const std::vector<ingest::Document>& corpus,
                               const BuildConfig& config, llm::Backend& backend,
                               const llm::PromptLibrary& prompts, BuildReport& report) {
    report = BuildReport{};
    report.config = config;
    report.documents = corpus.size();

    HeteroGraph g;
    std::vector<ingest::Chunk> chunks;
    for (const auto& doc : corpus) {
        auto doc_chunks = ingest::split_into_chunks(doc, config.chunking);
        for (auto& c : doc_chunks) {
            g.upsert_chunk(c);
            chunks.push_back(std::move(c));
        }
    }
    report.chunks_attempted = chunks.size();

    struct Slot {
        extract::ExtractionResult result;
        bool skipped = false;
        std::exception_ptr fatal;
    };
    std::vector<Slot> slots(chunks.size());
    detail::parallel_for(chunks.size(), config.workers, [&](std::size_t i) {
        try {
            slots[i].result =
                extract::extract_triplets(chunks[i], backend, prompts, config.extractor);
        } catch (const ExtractionParseFailure&) {
            slots[i].skipped = true;
        } catch (...) {
            slots[i].fatal = std::current_exception();
        }
    });

    // merge in chunk order so the built graph is order-deterministic
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].fatal) std::rethrow_exception(slots[i].fatal);
        if (slots[i].skipped) {
            ++report.chunks_skipped;
            continue;
        }
        ++report.chunks_extracted;
        for (const auto& t : slots[i].result.relationships) g.upsert_triplet(t);
        for (const auto& e : slots[i].result.entities) g.enrich_entity(e);
    }

    std::vector<extract::TripletRecord> all_triplets;
    all_triplets.reserve(g.triplets().size());
    for (const auto& [id, t] : g.triplets()) all_triplets.push_back(t);

    CoOccurrenceGraph cooc = build_cooccurrence_graph(all_triplets);
    std::vector<CommunityRecord> communities = leiden_cluster(cooc, config.leiden);
    for (auto& c : communities) {
        auto members = detail::community_triplets(g, c);
        c.summary = members.empty() ? std::string()
                                    : extract::summarize_community(members, backend, prompts);
        if (c.summary.empty()) {
            // communities with no triplet at all still need a usable summary
            std::string joined;
            for (const auto& m : c.members) {
                if (!joined.empty()) joined += ", ";
                joined += m;
            }
            c.summary = "Entities: " + joined;
        }
        g.upsert_community(c);
    }

    for (const auto& [id, c] : g.chunks())
        g.set_embedding(HeteroGraph::chunk_node_id(id), backend.embed(c.text));
    for (const auto& [id, t] : g.triplets())
        g.set_embedding(HeteroGraph::triplet_node_id(id),
                        backend.embed(detail::triplet_embedding_text(t)));
    for (const auto& [id, c] : g.communities())
        g.set_embedding(HeteroGraph::community_node_id(id), backend.embed(c.summary));

    report.entities = g.entities().size();
    report.triplets = g.triplets().size();
    report.communities = g.communities().size();
    report.embedded_nodes = g.embeddings().size();
    for (const auto& e : g.edges()) {
        switch (e.kind) {
        case EdgeKind::open_rel: ++report.open_rel_edges; break;
        case EdgeKind::mentioned_in: ++report.mentioned_in_edges; break;
        case EdgeKind::summary_for: ++report.summary_for_edges; break;
        }
    }
    return g;
}

} // namespace evorag::graph
