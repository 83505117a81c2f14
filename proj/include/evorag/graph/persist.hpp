#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evorag/errors.hpp"
#include "evorag/graph/hetero_graph.hpp"

namespace evorag::graph {

// On-disk index layout: line-delimited JSON record files (nodes.chunks,
// nodes.entities, nodes.triplets, nodes.communities, edges), embeddings.bin
// (a JSON manifest line mapping node_id -> float offset, then raw little-
// endian float32 data) and a manifest file with format version, dimension and
// counts. All iteration is over sorted maps, so the bytes are reproducible.

namespace persist_detail {

inline constexpr int kFormatVersion = 1;

inline void write_line(std::ofstream& out, const nlohmann::json& j) {
    out << j.dump() << '\n';
}

inline nlohmann::json parse_line(const std::string& file, std::size_t line_no,
                                 const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw IndexFormatError(file + " line " + std::to_string(line_no) +
                               ": malformed record: " + line);
    return j;
}

template <typename Fn>
inline void for_each_record(const std::filesystem::path& path, Fn fn) {
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexFormatError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(parse_line(path.filename().string(), line_no, line));
    }
}

inline std::string get_string(const nlohmann::json& j, const char* field,
                              const std::string& where) {
    if (!j.contains(field) || !j[field].is_string())
        throw IndexFormatError(where + ": missing field " + field + " in " + j.dump());
    return j[field].get<std::string>();
}

} // namespace persist_detail

inline void save_index(const HeteroGraph& g, const std::string& dir,
                       const nlohmann::json& build_info = nlohmann::json::object()) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::path base(dir);

    {
        std::ofstream out(base / "nodes.chunks", std::ios::binary);
        for (const auto& [id, c] : g.chunks())
            persist_detail::write_line(out, {{"id", id},
                                             {"doc_id", c.doc_id},
                                             {"text", c.text},
                                             {"token_start", c.token_start},
                                             {"token_count", c.token_count}});
    }
    {
        std::ofstream out(base / "nodes.entities", std::ios::binary);
        for (const auto& [key, e] : g.entities()) {
            nlohmann::json rec = {{"key", key},
                                  {"name", e.name},
                                  {"type", e.entity_type},
                                  {"description", e.description}};
            rec["aliases"] = std::vector<std::string>(e.aliases.begin(), e.aliases.end());
            persist_detail::write_line(out, rec);
        }
    }
    {
        std::ofstream out(base / "nodes.triplets", std::ios::binary);
        for (const auto& [id, t] : g.triplets())
            persist_detail::write_line(out, {{"id", id},
                                             {"subject", t.subject},
                                             {"predicate", t.predicate},
                                             {"object", t.object},
                                             {"subject_type", t.subject_type},
                                             {"object_type", t.object_type},
                                             {"description", t.description},
                                             {"source_chunk", t.source_chunk}});
    }
    {
        std::ofstream out(base / "nodes.communities", std::ios::binary);
        for (const auto& [id, c] : g.communities()) {
            nlohmann::json rec = {{"id", id},
                                  {"level", c.level},
                                  {"summary", c.summary},
                                  {"parent", c.parent}};
            rec["members"] = std::vector<std::string>(c.members.begin(), c.members.end());
            persist_detail::write_line(out, rec);
        }
    }
    {
        std::ofstream out(base / "edges", std::ios::binary);
        for (const auto& e : g.edges())
            persist_detail::write_line(out, {{"kind", edge_kind_name(e.kind)},
                                             {"source", e.source},
                                             {"target", e.target},
                                             {"label", e.label}});
    }
    {
        nlohmann::json manifest = {{"format_version", persist_detail::kFormatVersion},
                                   {"embedding_dim", g.embedding_dim()},
                                   {"counts",
                                    {{"chunks", g.chunks().size()},
                                     {"entities", g.entities().size()},
                                     {"triplets", g.triplets().size()},
                                     {"communities", g.communities().size()},
                                     {"edges", g.edges().size()},
                                     {"embeddings", g.embeddings().size()}}},
                                   {"build", build_info}};
        std::ofstream out(base / "manifest", std::ios::binary);
        out << manifest.dump(2) << '\n';
    }
    {
        nlohmann::json header;
        header["dim"] = g.embedding_dim();
        auto& entries = header["entries"] = nlohmann::json::array();
        std::size_t offset = 0;
        for (const auto& [node_id, vec] : g.embeddings()) {
            entries.push_back({{"id", node_id}, {"offset", offset}});
            offset += vec.size();
        }
        std::ofstream out(base / "embeddings.bin", std::ios::binary);
        out << header.dump() << '\n';
        for (const auto& [node_id, vec] : g.embeddings()) {
            for (float v : vec) {
                std::uint32_t bits;
                std::memcpy(&bits, &v, 4);
                char b[4] = {static_cast<char>(bits & 0xff),
                             static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff),
                             static_cast<char>((bits >> 24) & 0xff)};
                out.write(b, 4);
            }
        }
    }
}

inline HeteroGraph load_index(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path base(dir);
    if (!fs::is_directory(base))
        throw IndexFormatError("index directory not found: " + dir);

    HeteroGraph g;
    GraphRestorer restore{g};

    persist_detail::for_each_record(base / "nodes.chunks", [&](const nlohmann::json& j) {
        ingest::Chunk c;
        c.chunk_id = persist_detail::get_string(j, "id", "nodes.chunks");
        c.doc_id = persist_detail::get_string(j, "doc_id", "nodes.chunks");
        c.text = persist_detail::get_string(j, "text", "nodes.chunks");
        c.token_start = j.value("token_start", std::size_t{0});
        c.token_count = j.value("token_count", std::size_t{0});
        restore.chunk(c);
    });
    persist_detail::for_each_record(base / "nodes.entities", [&](const nlohmann::json& j) {
        extract::EntityRecord e;
        std::string key = persist_detail::get_string(j, "key", "nodes.entities");
        e.name = persist_detail::get_string(j, "name", "nodes.entities");
        e.entity_type = j.value("type", "");
        e.description = j.value("description", "");
        if (j.contains("aliases"))
            for (const auto& a : j["aliases"]) e.aliases.insert(a.get<std::string>());
        restore.entity(key, std::move(e));
    });
    persist_detail::for_each_record(base / "nodes.triplets", [&](const nlohmann::json& j) {
        extract::TripletRecord t;
        std::string id = persist_detail::get_string(j, "id", "nodes.triplets");
        t.subject = persist_detail::get_string(j, "subject", "nodes.triplets");
        t.predicate = j.value("predicate", "");
        t.object = persist_detail::get_string(j, "object", "nodes.triplets");
        t.subject_type = j.value("subject_type", "");
        t.object_type = j.value("object_type", "");
        t.description = j.value("description", "");
        t.source_chunk = persist_detail::get_string(j, "source_chunk", "nodes.triplets");
        restore.triplet(id, std::move(t));
    });
    persist_detail::for_each_record(base / "nodes.communities", [&](const nlohmann::json& j) {
        CommunityRecord c;
        c.community_id = persist_detail::get_string(j, "id", "nodes.communities");
        c.level = j.value("level", 0);
        c.summary = j.value("summary", "");
        c.parent = j.value("parent", "");
        if (j.contains("members"))
            for (const auto& m : j["members"]) c.members.insert(m.get<std::string>());
        restore.community(std::move(c));
    });
    persist_detail::for_each_record(base / "edges", [&](const nlohmann::json& j) {
        std::string kind = persist_detail::get_string(j, "kind", "edges");
        Edge e;
        if (kind == "OpenRel") e.kind = EdgeKind::open_rel;
        else if (kind == "MentionedIn") e.kind = EdgeKind::mentioned_in;
        else if (kind == "SummaryFor") e.kind = EdgeKind::summary_for;
        else throw IndexFormatError("edges: unknown edge kind " + kind);
        e.source = persist_detail::get_string(j, "source", "edges");
        e.target = persist_detail::get_string(j, "target", "edges");
        e.label = j.value("label", "");
        restore.edge(std::move(e));
    });

    fs::path bin = base / "embeddings.bin";
    if (fs::exists(bin)) {
        std::ifstream in(bin, std::ios::binary);
        if (!in) throw IndexFormatError("cannot open embeddings.bin");
        std::string header_line;
        if (!std::getline(in, header_line))
            throw IndexFormatError("embeddings.bin: missing header");
        nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
        if (header.is_discarded() || !header.is_object() || !header.contains("dim") ||
            !header.contains("entries"))
            throw IndexFormatError("embeddings.bin: malformed header");
        std::size_t dim = header["dim"].get<std::size_t>();

        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (const auto& entry : header["entries"]) {
            std::string node_id = persist_detail::get_string(entry, "id", "embeddings.bin");
            std::size_t offset = entry["offset"].get<std::size_t>();
            if ((offset + dim) * 4 > data.size())
                throw IndexFormatError("embeddings.bin: truncated data for " + node_id);
            StoredEmbedding vec(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                const unsigned char* b =
                    reinterpret_cast<const unsigned char*>(data.data() + (offset + i) * 4);
                std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                     (static_cast<std::uint32_t>(b[1]) << 8) |
                                     (static_cast<std::uint32_t>(b[2]) << 16) |
                                     (static_cast<std::uint32_t>(b[3]) << 24);
                float v;
                std::memcpy(&v, &bits, 4);
                vec[i] = v;
            }
            restore.embedding(node_id, std::move(vec));
        }
    }

    auto issues = validate(g, false);
    if (!issues.empty())
        throw IndexFormatError("loaded index fails validation: " + issues.front());
    return g;
}

} // namespace evorag::graph
