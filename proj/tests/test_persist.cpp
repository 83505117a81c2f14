#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "evorag/graph/persist.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_index.hpp"

using namespace evorag;

namespace {

llm::ScriptedBackend toy_backend(const testsupport::TempDir& dir) {
    auto path = dir.file("build.script", testsupport::toy_build_script());
    return llm::ScriptedBackend(llm::load_script(path), 16, 0);
}

std::string dir_bytes(const std::string& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
        all += f.filename().string();
        all += '\0';
        all += testsupport::read_file(f.string());
        all += '\0';
    }
    return all;
}

} // namespace

TEST_CASE("save/load round trip is graph-equal with bit-exact embeddings") {
    testsupport::TempDir dir;
    auto backend = toy_backend(dir);
    graph::BuildReport report;
    auto g = testsupport::build_toy_index(backend, report);
    REQUIRE(graph::validate(g, true).empty());
    REQUIRE(report.chunks_skipped == 0);
    REQUIRE(g.triplets().size() == 5);

    graph::save_index(g, dir.sub("index"), report.to_json());
    auto loaded = graph::load_index(dir.sub("index"));
    CHECK(graph::graph_equal(g, loaded));
    CHECK(loaded.embedding_dim() == 16);
}

TEST_CASE("saving the same graph twice produces byte-identical files") {
    testsupport::TempDir dir;
    auto backend = toy_backend(dir);
    graph::BuildReport report;
    auto g = testsupport::build_toy_index(backend, report);

    graph::save_index(g, dir.sub("index_a"));
    graph::save_index(g, dir.sub("index_b"));
    CHECK(dir_bytes(dir.sub("index_a")) == dir_bytes(dir.sub("index_b")));

    // and re-saving a loaded graph is stable too
    auto loaded = graph::load_index(dir.sub("index_a"));
    graph::save_index(loaded, dir.sub("index_c"));
    CHECK(dir_bytes(dir.sub("index_a")) == dir_bytes(dir.sub("index_c")));
}

TEST_CASE("an empty directory loads as an empty graph") {
    testsupport::TempDir dir;
    std::filesystem::create_directories(dir.sub("empty_index"));
    auto g = graph::load_index(dir.sub("empty_index"));
    CHECK(g.empty());
    CHECK(g.edges().empty());
    CHECK(g.embeddings().empty());
}

TEST_CASE("a missing directory is an index format error") {
    testsupport::TempDir dir;
    CHECK_THROWS_AS(graph::load_index(dir.sub("nope")), IndexFormatError);
}

TEST_CASE("malformed record files are rejected with the offending record") {
    testsupport::TempDir dir;
    std::filesystem::create_directories(dir.sub("broken"));
    dir.file("broken/nodes.chunks", "{\"id\": \"c1\", \"doc_id\": \"d\", \"text\": \"t\"}\n"
                                    "this is not json\n");
    try {
        graph::load_index(dir.sub("broken"));
        FAIL("expected IndexFormatError");
    } catch (const IndexFormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("a truncated embeddings file is rejected") {
    testsupport::TempDir dir;
    auto backend = toy_backend(dir);
    graph::BuildReport report;
    auto g = testsupport::build_toy_index(backend, report);
    graph::save_index(g, dir.sub("index"));

    auto bin_path = dir.sub("index") + "/embeddings.bin";
    std::string data = testsupport::read_file(bin_path);
    std::ofstream out(bin_path, std::ios::binary);
    out << data.substr(0, data.size() / 2);
    out.close();
    CHECK_THROWS_AS(graph::load_index(dir.sub("index")), IndexFormatError);
}

TEST_CASE("a record file referencing missing nodes fails validation on load") {
    testsupport::TempDir dir;
    std::filesystem::create_directories(dir.sub("dangling"));
    dir.file("dangling/edges",
             R"({"kind": "OpenRel", "source": "entity:a", "target": "entity:b", "label": "r"})"
             "\n");
    CHECK_THROWS_AS(graph::load_index(dir.sub("dangling")), IndexFormatError);
}
