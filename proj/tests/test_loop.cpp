#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <thread>

#include "evorag/loop/engine.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_index.hpp"

using namespace evorag;

namespace {

constexpr const char* kRespondMarker = "using only this context";
constexpr const char* kJudgeMarker = "single word: YES or NO";
constexpr const char* kEvolveMarker = "If no further information can be extracted";
constexpr const char* kRefineMarker = "refine the sub-graph";

int count_calls(const llm::ScriptedBackend& backend, const std::string& marker) {
    int n = 0;
    for (const auto& prompt : backend.prompt_log())
        if (prompt.find(marker) != std::string::npos) ++n;
    return n;
}

graph::HeteroGraph toy_graph(std::size_t dim = 16) {
    testsupport::TempDir dir;
    auto path = dir.file("build.script", testsupport::toy_build_script());
    llm::ScriptedBackend builder(llm::load_script(path), dim, 0);
    graph::BuildReport report;
    return testsupport::build_toy_index(builder, report);
}

retrieval::EvidenceSubgraph simple_evidence(const graph::HeteroGraph& g,
                                            llm::ScriptedBackend& backend) {
    auto prompts = llm::PromptLibrary::builtin();
    return retrieval::retrieve_subgraph("ryan adams", g, backend, prompts);
}

} // namespace

TEST_CASE("respond answers from a scripted backend and renders history verbatim") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back(
        {{kRespondMarker, "Query: Who is the performer of the song When The Stars Go Blue?"},
         "",
         "Ryan Adams."});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();
    auto evidence = simple_evidence(g, backend);

    loop::Trajectory empty;
    CHECK(loop::respond("Who is the performer of the song When The Stars Go Blue?", evidence,
                        empty, backend, prompts) == "Ryan Adams.");

    loop::Trajectory history;
    history.steps.push_back({"first sub-query", "first answer", 0, evidence});
    history.steps.push_back({"second sub-query", "second answer", 0, evidence});
    loop::respond("another question", evidence, history, backend, prompts);
    std::string prompt = backend.prompt_log().back();
    CHECK(prompt.find("first sub-query") != std::string::npos);
    CHECK(prompt.find("first answer") != std::string::npos);
    CHECK(prompt.find("second sub-query") != std::string::npos);
    CHECK(prompt.find("second answer") != std::string::npos);
}

TEST_CASE("respond with empty-rendered evidence still works; default answers Unknown") {
    auto g = toy_graph();
    llm::ScriptedBackend backend({}, 16);
    auto prompts = llm::PromptLibrary::builtin();
    retrieval::EvidenceSubgraph evidence;   // nothing retrieved
    loop::Trajectory empty;
    CHECK(loop::respond("anything", evidence, empty, backend, prompts) == "Unknown");
}

TEST_CASE("judge returns 0 for Unknown answers without calling the backend") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kJudgeMarker}, "", "YES"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();
    auto evidence = simple_evidence(g, backend);
    int before = backend.complete_calls();

    CHECK(loop::judge_sufficiency("q", evidence, "Unknown", backend, prompts) == 0);
    CHECK(loop::judge_sufficiency("q", evidence, "unknown.", backend, prompts) == 0);
    CHECK(backend.complete_calls() == before);

    CHECK(loop::judge_sufficiency("q", evidence, "Paris", backend, prompts) == 1);
}

TEST_CASE("judge treats verdict-free prose as insufficient") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kJudgeMarker}, "", "The evidence seems broadly adequate to me."});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();
    auto evidence = simple_evidence(g, backend);
    CHECK(loop::judge_sufficiency("q", evidence, "Paris", backend, prompts) == 0);

    llm::ScriptedBackendTable no_table;
    no_table.entries.push_back({{kJudgeMarker}, "", "NO, more evidence is needed"});
    llm::ScriptedBackend no_backend(no_table, 16);
    CHECK(loop::judge_sufficiency("q", evidence, "Paris", no_backend, prompts) == 0);
}

TEST_CASE("query evolution returns the scripted sub-question") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back(
        {{kEvolveMarker, "Question: How many Grand Slam titles does the winner"}, "",
         "Who was the winner of the 2020 Australian Open?"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();
    auto evidence = simple_evidence(g, backend);

    loop::Trajectory empty;
    auto next = loop::evolve_query(
        "How many Grand Slam titles does the winner of the 2020 Australian Open have?", evidence,
        empty, backend, prompts);
    REQUIRE(next.has_value());
    CHECK(*next == "Who was the winner of the 2020 Australian Open?");
    // no prior steps renders the template's "Previous reasoning: None"
    CHECK(backend.prompt_log().back().find("Previous reasoning: None") != std::string::npos);
}

TEST_CASE("query evolution stops on None, empty output, or a Next question prefix is stripped") {
    auto g = toy_graph();
    auto prompts = llm::PromptLibrary::builtin();
    loop::Trajectory empty;

    llm::ScriptedBackendTable none_table;
    none_table.entries.push_back({{kEvolveMarker}, "", "None"});
    llm::ScriptedBackend none_backend(none_table, 16);
    auto evidence = simple_evidence(g, none_backend);
    CHECK_FALSE(loop::evolve_query("q", evidence, empty, none_backend, prompts).has_value());

    llm::ScriptedBackendTable blank_table;
    blank_table.entries.push_back({{kEvolveMarker}, "", ""});
    llm::ScriptedBackend blank_backend(blank_table, 16);
    CHECK_FALSE(loop::evolve_query("q", evidence, empty, blank_backend, prompts).has_value());

    llm::ScriptedBackendTable prefixed;
    prefixed.entries.push_back({{kEvolveMarker}, "", "Next question: What is the capital?"});
    llm::ScriptedBackend prefixed_backend(prefixed, 16);
    auto next = loop::evolve_query("q", evidence, empty, prefixed_backend, prompts);
    REQUIRE(next.has_value());
    CHECK(*next == "What is the capital?");
}

namespace {

retrieval::EvidenceSubgraph curie_evidence() {
    retrieval::EvidenceSubgraph ev;
    ev.triples.push_back({"Marie Curie", "won", "Nobel Prize in Physics", "triplet:t0", false});
    ev.triples.push_back({"Marie Curie", "born in", "Warsaw", "triplet:t1", false});
    ev.triples.push_back({"Marie Curie", "spouse", "Pierre Curie", "triplet:t2", false});
    ev.triples.push_back({"Apple Inc.", "founded by", "Steve Jobs", "triplet:t3", false});
    return ev;
}

} // namespace

TEST_CASE("subgraph refinement drops, keeps and adds triples as scripted") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRefineMarker, "Query: What are the major achievements"}, "",
                             "Marie Curie -> won -> Nobel Prize in Physics\n"
                             "Marie Curie -> won -> Nobel Prize in Chemistry\n"
                             "Marie Curie -> spouse -> Pierre Curie"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    auto evolved = loop::evolve_subgraph("What are the major achievements of Marie Curie?",
                                         curie_evidence(), g, backend, prompts, {});
    REQUIRE(evolved.triples.size() == 3);
    CHECK(evolved.triples[0].object == "Nobel Prize in Physics");
    CHECK_FALSE(evolved.triples[0].inferred);   // kept graph-backed fact
    CHECK(evolved.triples[0].node_id == "triplet:t0");
    CHECK(evolved.triples[1].object == "Nobel Prize in Chemistry");
    CHECK(evolved.triples[1].inferred);         // filled-in fact
    CHECK(evolved.triples[2].predicate == "spouse");
    for (const auto& t : evolved.triples) {
        CHECK(t.subject != "Apple Inc.");
        CHECK(t.object != "Warsaw");
    }
    CHECK(evolved.rendered_evidence.find("Nobel Prize in Chemistry [inferred]") !=
          std::string::npos);
}

TEST_CASE("a refinement echoing its input leaves the union unchanged") {
    auto g = toy_graph();
    auto input = curie_evidence();
    std::vector<std::string> lines;
    for (const auto& t : input.triples)
        lines.push_back(extract::triple_line(t.subject, t.predicate, t.object));
    std::sort(lines.begin(), lines.end());
    std::string echo;
    for (const auto& l : lines) echo += l + "\n";

    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRefineMarker}, "", echo});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    auto evolved = loop::evolve_subgraph("q", input, g, backend, prompts, {});
    REQUIRE(evolved.triples.size() == 4);
    for (const auto& t : evolved.triples) CHECK_FALSE(t.inferred);
}

TEST_CASE("a None refinement clears all triples but keeps chunks") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRefineMarker}, "", "None"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    auto evolved = loop::evolve_subgraph("q", curie_evidence(), g, backend, prompts, {});
    CHECK(evolved.triples.empty());
    CHECK(evolved.rendered_evidence.find("Passages:") != std::string::npos);
}

TEST_CASE("an unparsable refinement fails open to the union") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRefineMarker}, "", "I cannot help with graphs, sorry."});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    auto evolved = loop::evolve_subgraph("q", curie_evidence(), g, backend, prompts, {});
    CHECK(evolved.triples.size() >= 4);
}

TEST_CASE("final synthesis reuses a reward-1 answer without another call") {
    auto g = toy_graph();
    llm::ScriptedBackend backend({}, 16);
    auto prompts = llm::PromptLibrary::builtin();

    loop::Trajectory traj;
    traj.original_query = "q";
    traj.steps.push_back({"q", "Paris", 1, {}});
    int before = backend.complete_calls();
    CHECK(loop::synthesize_final("q", traj, backend, prompts) == "Paris");
    CHECK(backend.complete_calls() == before);

    // horizon-exhausted trajectories always synthesize
    loop::Trajectory spent;
    spent.original_query = "q";
    spent.steps.push_back({"q", "partial", 0, {}});
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRespondMarker}, "", "synthesized answer"});
    llm::ScriptedBackend synth(table, 16);
    CHECK(loop::synthesize_final("q", spent, synth, prompts) == "synthesized answer");
    CHECK(synth.complete_calls() == 1);

    // strict mode synthesizes even on reward-1 exits
    llm::ScriptedBackend strict(table, 16);
    CHECK(loop::synthesize_final("q", traj, strict, prompts, true) == "synthesized answer");

    CHECK_THROWS_AS(loop::synthesize_final("q", loop::Trajectory{}, backend, prompts),
                    std::invalid_argument);
}

TEST_CASE("an immediately sufficient judge exits after one respond and no evolutions") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kRespondMarker}, "", "Paris"});
    table.entries.push_back({{kJudgeMarker}, "", "YES"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    loop::LoopConfig config;
    config.horizon = 3;
    auto [answer, traj] = loop::run_loop("capital?", g, config, backend, prompts);

    CHECK(answer == "Paris");
    REQUIRE(traj.steps.size() == 1);
    CHECK(traj.steps[0].reward == 1);
    CHECK(traj.steps[0].sub_query == "capital?");
    CHECK(count_calls(backend, kRespondMarker) == 1);
    CHECK(count_calls(backend, kJudgeMarker) == 1);
    CHECK(count_calls(backend, kEvolveMarker) == 0);
    CHECK(count_calls(backend, kRefineMarker) == 0);
}

TEST_CASE("a never-sufficient judge runs exactly K iterations then synthesizes") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kEvolveMarker, "- STEP3"}, "", "STEP4 follow-up"});
    table.entries.push_back({{kEvolveMarker, "- STEP2"}, "", "STEP3 follow-up"});
    table.entries.push_back({{kEvolveMarker}, "", "STEP2 follow-up"});
    table.entries.push_back({{kJudgeMarker}, "", "NO"});
    table.entries.push_back({{kRefineMarker}, "", "None"});
    table.entries.push_back({{kRespondMarker}, "", "an answer"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    loop::LoopConfig config;
    config.horizon = 3;
    config.keyword_expansion_subqueries = false;
    auto [answer, traj] = loop::run_loop("hard question", g, config, backend, prompts);

    REQUIRE(traj.steps.size() == 3);
    CHECK(traj.steps[0].sub_query == "STEP2 follow-up");
    CHECK(traj.steps[1].sub_query == "STEP3 follow-up");
    CHECK(traj.steps[2].sub_query == "STEP4 follow-up");
    for (const auto& s : traj.steps) CHECK(s.reward == 0);
    CHECK(count_calls(backend, kRespondMarker) == 4);   // 3 responds + 1 synthesis
    CHECK(count_calls(backend, kEvolveMarker) == 3);
    CHECK(count_calls(backend, kRefineMarker) == 3);
    CHECK(answer == "an answer");
}

TEST_CASE("a repeated sub-query trips the loop guard and stops") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kEvolveMarker}, "", "STEP2 repeat me"});
    table.entries.push_back({{kJudgeMarker}, "", "NO"});
    table.entries.push_back({{kRefineMarker}, "", "None"});
    table.entries.push_back({{kRespondMarker}, "", "an answer"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();

    loop::LoopConfig config;
    config.horizon = 5;
    config.keyword_expansion_subqueries = false;
    auto [answer, traj] = loop::run_loop("hard question", g, config, backend, prompts);

    // round 0 evolves to STEP2; round 1's evolution repeats it and stops
    REQUIRE(traj.steps.size() == 2);
    CHECK(count_calls(backend, kEvolveMarker) == 2);
    CHECK(count_calls(backend, kRefineMarker) == 1);
    CHECK(count_calls(backend, kRespondMarker) == 3);   // 2 responds + synthesis
}

TEST_CASE("identical runs produce byte-identical audit logs") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kEvolveMarker, "- STEP2"}, "", "None"});
    table.entries.push_back({{kEvolveMarker}, "", "STEP2 probe"});
    table.entries.push_back({{kJudgeMarker}, "", "NO"});
    table.entries.push_back({{kRefineMarker}, "", "Ryan Adams -> nationality -> American"});
    table.entries.push_back({{kRespondMarker}, "", "an answer"});
    auto prompts = llm::PromptLibrary::builtin();
    loop::LoopConfig config;

    auto run_once = [&] {
        llm::ScriptedBackend backend(table, 16);
        auto [answer, traj] = loop::run_loop("some question", g, config, backend, prompts);
        std::ostringstream audit;
        loop::write_audit(traj, audit);
        return audit.str();
    };
    std::string first = run_once();
    CHECK_FALSE(first.empty());
    CHECK(first == run_once());
    // the injected fact is flagged in the audit
    CHECK(first.find("Ryan Adams -> nationality -> American") != std::string::npos);
}

TEST_CASE("independent queries run concurrently against one shared index") {
    auto g = toy_graph();
    llm::ScriptedBackendTable table;
    table.entries.push_back({{kJudgeMarker}, "", "YES"});
    table.entries.push_back({{kRespondMarker, "Query: q-a"}, "", "answer a"});
    table.entries.push_back({{kRespondMarker, "Query: q-b"}, "", "answer b"});
    table.entries.push_back({{kRespondMarker}, "", "other"});
    llm::ScriptedBackend backend(table, 16);
    auto prompts = llm::PromptLibrary::builtin();
    loop::LoopConfig config;

    std::vector<std::thread> threads;
    std::vector<std::string> answers(8);
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            std::string q = t % 2 == 0 ? "q-a" : "q-b";
            answers[t] = loop::run_loop(q, g, config, backend, prompts).first;
        });
    for (auto& t : threads) t.join();
    for (int t = 0; t < 8; ++t)
        CHECK(answers[t] == (t % 2 == 0 ? "answer a" : "answer b"));
}

TEST_CASE("transport failures abort with the partial trajectory attached") {
    auto g = toy_graph();

    class FlakyBackend : public llm::Backend {
    public:
        explicit FlakyBackend(std::size_t dim) : helper_({}, dim) {}
        std::string complete(const llm::ChatRequest& request) override {
            std::string prompt = request.rendered();
            if (prompt.find(kEvolveMarker) != std::string::npos)
                throw TransportError("backend went away");
            if (prompt.find(kJudgeMarker) != std::string::npos) return "NO";
            return "an answer";
        }
        llm::EmbeddingVector embed(const std::string& text) override {
            return helper_.embed(text);
        }
        std::size_t embedding_dim() const override { return helper_.embedding_dim(); }

    private:
        llm::ScriptedBackend helper_;
    };

    FlakyBackend backend(16);
    auto prompts = llm::PromptLibrary::builtin();
    loop::LoopConfig config;
    try {
        loop::run_loop("q", g, config, backend, prompts);
        FAIL("expected LoopTransportError");
    } catch (const loop::LoopTransportError& e) {
        CHECK(e.partial().original_query == "q");
        CHECK(e.partial().steps.empty());   // died during the first evolution
    }
}
