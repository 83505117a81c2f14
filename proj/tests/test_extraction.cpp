#include <catch2/catch_amalgamated.hpp>

#include "evorag/extract/community_summary.hpp"
#include "evorag/extract/extractor.hpp"
#include "evorag/extract/keywords.hpp"
#include "evorag/llm/scripted_backend.hpp"
#include "support/oracles.hpp"

using namespace evorag;

namespace {

ingest::Chunk chunk_of(const std::string& text, const std::string& id = "doc:0") {
    ingest::Chunk c;
    c.chunk_id = id;
    c.doc_id = "doc";
    c.text = text;
    c.token_count = 1;
    return c;
}

const char* kEinsteinJson = R"JSON({
  "entities": [
    { "entity_name": "Albert Einstein", "entity_type": "Person", "entity_description": "physicist" },
    { "entity_name": "Theory of Relativity", "entity_type": "Scientific Theory", "entity_description": "spacetime" },
    { "entity_name": "Nobel Prize in Physics", "entity_type": "Award", "entity_description": "prize" }
  ],
  "relationships": [
    { "source_entity": "Albert Einstein", "target_entity": "Theory of Relativity", "relation": "developed", "relationship_description": "developed it" },
    { "source_entity": "Albert Einstein", "target_entity": "Nobel Prize in Physics", "relation": "won", "relationship_description": "won it" }
  ]
})JSON";

} // namespace

TEST_CASE("extracting the worked example yields its two relationships") {
    llm::ScriptedBackendTable table;
    table.entries.push_back({{"text: Einstein passage"}, "",
                             std::string("Here is the result:\n") + kEinsteinJson});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    auto result = extract::extract_triplets(chunk_of("Einstein passage"), backend, prompts);
    REQUIRE(result.relationships.size() == 2);
    CHECK(result.relationships[0].subject == "Albert Einstein");
    CHECK(result.relationships[0].predicate == "developed");
    CHECK(result.relationships[0].object == "Theory of Relativity");
    CHECK(result.relationships[1].predicate == "won");
    CHECK(result.relationships[1].object == "Nobel Prize in Physics");
    CHECK(result.relationships[0].subject_type == "Person");
    CHECK(result.relationships[0].object_type == "Scientific Theory");
    CHECK(result.relationships[0].source_chunk == "doc:0");
    CHECK(result.entities.size() == 3);
    CHECK(result.parse_attempts == 1);
}

TEST_CASE("over-produced relationships truncate to max_triplets in listed order") {
    nlohmann::json obj;
    obj["entities"] = nlohmann::json::array();
    obj["relationships"] = nlohmann::json::array();
    for (int i = 0; i < 5; ++i)
        obj["relationships"].push_back({{"source_entity", "S" + std::to_string(i)},
                                        {"target_entity", "T" + std::to_string(i)},
                                        {"relation", "r"}});
    llm::ScriptedBackendTable table;
    table.entries.push_back({{}, "", obj.dump()});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    auto result = extract::extract_triplets(chunk_of("anything"), backend, prompts, {2, 2});
    REQUIRE(result.relationships.size() == 2);
    CHECK(result.relationships[0].subject == "S0");
    CHECK(result.relationships[1].subject == "S1");
}

TEST_CASE("unparsable output on every attempt raises ExtractionParseFailure") {
    llm::ScriptedBackendTable table;
    table.entries.push_back({{}, "", "I could not find any structured data in this passage."});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    CHECK_THROWS_AS(extract::extract_triplets(chunk_of("text"), backend, prompts, {2, 2}),
                    ExtractionParseFailure);
    CHECK(backend.complete_calls() == 3);   // first attempt + two re-prompts
}

TEST_CASE("a re-prompt recovers from one malformed completion") {
    llm::ScriptedBackendTable table;
    // the reminder message only appears in re-prompts
    table.entries.push_back({{"could not be parsed"}, "", kEinsteinJson});
    table.entries.push_back({{}, "", "prose with no braces"});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    auto result = extract::extract_triplets(chunk_of("text"), backend, prompts);
    CHECK(result.parse_attempts == 2);
    CHECK(result.relationships.size() == 2);
}

TEST_CASE("canonicalization is idempotent on arbitrary strings") {
    testsupport::TestRng rng(7);
    const std::string alphabet = "aA zZ\t\n.,-09'";
    for (int iter = 0; iter < 500; ++iter) {
        std::string s;
        std::size_t len = rng.below(24);
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
        std::string once = extract::canonical_key(s);
        CHECK(extract::canonical_key(once) == once);
    }
}

TEST_CASE("relationship endpoints missing from the entity list are synthesized") {
    nlohmann::json obj;
    obj["entities"] = {{{"entity_name", "Known"}, {"entity_type", "Thing"}}};
    obj["relationships"] = {{{"source_entity", "Known"},
                             {"target_entity", "Ghost Entity"},
                             {"relation", "haunts"}}};
    llm::ScriptedBackendTable table;
    table.entries.push_back({{}, "", obj.dump()});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    auto result = extract::extract_triplets(chunk_of("x"), backend, prompts);
    REQUIRE(result.relationships.size() == 1);
    bool found = false;
    for (const auto& e : result.entities)
        if (e.name == "Ghost Entity") {
            found = true;
            CHECK(e.entity_type.empty());
            CHECK(e.description.empty());
        }
    CHECK(found);
}

TEST_CASE("case variants merge into one entity with aliases") {
    nlohmann::json obj;
    obj["entities"] = {{{"entity_name", "Ada  Lovelace"}, {"entity_type", "Person"}},
                       {{"entity_name", "ada lovelace"}, {"entity_type", "Person"}}};
    obj["relationships"] = {{{"source_entity", "ADA LOVELACE"},
                             {"target_entity", "Analytical Engine"},
                             {"relation", "programmed"}}};
    llm::ScriptedBackendTable table;
    table.entries.push_back({{}, "", obj.dump()});
    llm::ScriptedBackend backend(table, 8);
    auto prompts = llm::PromptLibrary::builtin();

    auto result = extract::extract_triplets(chunk_of("x"), backend, prompts);
    int ada_count = 0;
    for (const auto& e : result.entities)
        if (extract::canonical_key(e.name) == "ada lovelace") {
            ++ada_count;
            CHECK(e.name == "Ada Lovelace");   // first-seen casing, whitespace collapsed
            CHECK(e.aliases.count("ada lovelace") == 1);
        }
    CHECK(ada_count == 1);
    CHECK(result.relationships[0].subject == "Ada Lovelace");
}

TEST_CASE("every relationship endpoint has an entity record") {
    testsupport::TestRng rng(13);
    auto prompts = llm::PromptLibrary::builtin();
    for (int iter = 0; iter < 20; ++iter) {
        nlohmann::json obj;
        obj["entities"] = nlohmann::json::array();
        obj["relationships"] = nlohmann::json::array();
        std::size_t rels = 1 + rng.below(6);
        for (std::size_t i = 0; i < rels; ++i)
            obj["relationships"].push_back(
                {{"source_entity", "E" + std::to_string(rng.below(4))},
                 {"target_entity", "E" + std::to_string(rng.below(4))},
                 {"relation", "r" + std::to_string(i)}});
        llm::ScriptedBackendTable table;
        table.entries.push_back({{}, "", obj.dump()});
        llm::ScriptedBackend backend(table, 8);

        auto result = extract::extract_triplets(chunk_of("x"), backend, prompts, {3, 0});
        CHECK(result.relationships.size() <= 3);
        for (const auto& rel : result.relationships) {
            bool subject_ok = false, object_ok = false;
            for (const auto& e : result.entities) {
                if (e.name == rel.subject) subject_ok = true;
                if (e.name == rel.object) object_ok = true;
            }
            CHECK(subject_ok);
            CHECK(object_ok);
        }
    }
}

TEST_CASE("community summary input is sorted and deterministic under shuffling") {
    extract::TripletRecord t1{"B", "rel1", "C", "", "", "desc1", "c"};
    extract::TripletRecord t2{"A", "rel2", "D", "", "", "desc2", "c"};
    extract::TripletRecord t3{"A", "arel", "B", "", "", "desc3", "c"};

    std::string a = extract::render_community_info({t1, t2, t3});
    std::string b = extract::render_community_info({t3, t1, t2});
    CHECK(a == b);
    CHECK(a ==
          "A -> B -> arel -> desc3\n"
          "A -> D -> rel2 -> desc2\n"
          "B -> C -> rel1 -> desc1");
}

TEST_CASE("community summary echoes the backend and falls back on blank output") {
    extract::TripletRecord t{"Mars", "orbits", "Sun", "", "", "fourth planet", "c"};
    auto prompts = llm::PromptLibrary::builtin();

    llm::ScriptedBackendTable echo;
    echo.entries.push_back({{"fourth planet"}, "", "Mars orbits the Sun."});
    llm::ScriptedBackend backend(echo, 8);
    CHECK(extract::summarize_community({t}, backend, prompts) == "Mars orbits the Sun.");

    llm::ScriptedBackendTable blank;
    blank.entries.push_back({{}, "", ""});
    llm::ScriptedBackend silent(blank, 8);
    CHECK(extract::summarize_community({t}, silent, prompts) ==
          "Mars -> Sun -> orbits -> fourth planet");

    CHECK_THROWS_AS(extract::summarize_community({}, backend, prompts), std::invalid_argument);
}

TEST_CASE("keyword expansion splits, dedupes and caps") {
    auto prompts = llm::PromptLibrary::builtin();

    llm::ScriptedBackendTable table;
    table.entries.push_back({{"QUERY: learning"}, "", "machine learning^ML^AI models"});
    llm::ScriptedBackend backend(table, 8);
    auto out = extract::expand_keywords("learning", 10, backend, prompts);
    CHECK(out == std::vector<std::string>{"learning", "machine learning", "ML", "AI models"});

    llm::ScriptedBackendTable blank;
    blank.entries.push_back({{}, "", ""});
    llm::ScriptedBackend silent(blank, 8);
    CHECK(extract::expand_keywords("learning", 10, silent, prompts) ==
          std::vector<std::string>{"learning"});

    std::string twenty;
    for (int i = 0; i < 20; ++i) twenty += (i ? "^kw" : "kw") + std::to_string(i);
    llm::ScriptedBackendTable many;
    many.entries.push_back({{}, "", twenty});
    llm::ScriptedBackend wide(many, 8);
    CHECK(extract::expand_keywords("learning", 5, wide, prompts).size() == 5);
}

TEST_CASE("keyword expansion strips the KEYWORDS prefix and query duplicates") {
    auto prompts = llm::PromptLibrary::builtin();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{}, "", "KEYWORDS: Learning^learning^deep learning"});
    llm::ScriptedBackend backend(table, 8);
    auto out = extract::expand_keywords("learning", 10, backend, prompts);
    CHECK(out == std::vector<std::string>{"learning", "deep learning"});
}
