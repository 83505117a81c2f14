#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evorag/config.hpp"
#include "evorag/errors.hpp"
#include "evorag/eval/aggregate.hpp"
#include "evorag/eval/metrics.hpp"
#include "evorag/graph/build.hpp"
#include "evorag/graph/persist.hpp"
#include "evorag/ingest/corpus.hpp"
#include "evorag/loop/engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

evorag::EngineConfig load_config(const std::string& path) {
    if (path.empty()) return evorag::EngineConfig{};
    return evorag::EngineConfig::load(path);
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw evorag::Error("cannot open " + path);
    std::vector<json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw evorag::Error(path + " line " + std::to_string(line_no) + ": malformed record");
        records.push_back(std::move(j));
    }
    return records;
}

int cmd_index(const evorag::EngineConfig& config, const std::string& corpus_path,
              const std::string& out_dir) {
    if (!fs::exists(corpus_path)) {
        std::cerr << "corpus path not found: " << corpus_path << "\n";
        return kExitUsage;
    }
    auto corpus = evorag::ingest::load_corpus(corpus_path);
    auto backend = config.make_backend();
    auto prompts = config.prompt_library();
    evorag::graph::BuildReport report;
    evorag::graph::HeteroGraph g =
        evorag::graph::build_index(corpus, config.build_config(), *backend, prompts, report);
    std::string dir = out_dir.empty() ? config.index_path : out_dir;
    evorag::graph::save_index(g, dir, report.to_json());

    std::cout << "index written to " << dir << "\n";
    std::cout << "documents:        " << report.documents << "\n";
    std::cout << "chunks attempted: " << report.chunks_attempted << "\n";
    std::cout << "chunks extracted: " << report.chunks_extracted << "\n";
    std::cout << "chunks skipped:   " << report.chunks_skipped << "\n";
    std::cout << "entities:         " << report.entities << "\n";
    std::cout << "triplets:         " << report.triplets << "\n";
    std::cout << "communities:      " << report.communities << "\n";
    std::cout << "edges:            OpenRel=" << report.open_rel_edges
              << " MentionedIn=" << report.mentioned_in_edges
              << " SummaryFor=" << report.summary_for_edges << "\n";
    std::cout << "embedded nodes:   " << report.embedded_nodes << "\n";
    std::cout << "seed=" << report.config.leiden.seed
              << " resolution=" << report.config.leiden.resolution
              << " max_cluster_size=" << report.config.leiden.max_cluster_size << "\n";
    return kExitOk;
}

int cmd_query(const evorag::EngineConfig& config, const std::string& question,
              const std::string& index_dir, const std::string& audit_path,
              bool always_synthesize, int max_rounds) {
    std::string dir = index_dir.empty() ? config.index_path : index_dir;
    if (!fs::is_directory(dir)) {
        std::cerr << "index directory not found: " << dir << "\n";
        return kExitUsage;
    }
    auto g = evorag::graph::load_index(dir);
    auto backend = config.make_backend();
    auto prompts = config.prompt_library();
    auto loop_config = config.loop_config();
    if (always_synthesize) loop_config.always_synthesize = true;
    if (max_rounds > 0) loop_config.horizon = max_rounds;

    auto write_audit_file = [&](const evorag::loop::Trajectory& traj) {
        if (audit_path.empty()) return;
        std::ofstream out(audit_path, std::ios::binary);
        evorag::loop::write_audit(traj, out);
    };

    try {
        auto [answer, traj] =
            evorag::loop::run_loop(question, g, loop_config, *backend, prompts);
        write_audit_file(traj);
        std::cout << answer << "\n";
        return kExitOk;
    } catch (const evorag::loop::LoopTransportError& e) {
        write_audit_file(e.partial());
        std::cerr << "query aborted: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_eval(const evorag::EngineConfig& config, const std::string& pred_path,
             const std::string& gold_path, const std::string& out_path) {
    auto preds = read_jsonl(pred_path);
    auto golds = read_jsonl(gold_path);

    std::map<std::string, std::string> pred_by_id;
    for (const auto& p : preds) {
        std::string id = p.value("id", "");
        pred_by_id[id] = p.contains("prediction") ? p.value("prediction", "")
                                                  : p.value("answer", "");
    }
    std::map<std::string, std::pair<std::string, std::vector<std::string>>> gold_by_id;
    for (const auto& gj : golds) {
        std::string id = gj.value("id", "");
        std::vector<std::string> answers;
        if (gj.contains("answers") && gj["answers"].is_array())
            for (const auto& a : gj["answers"]) answers.push_back(a.get<std::string>());
        else if (gj.contains("answer"))
            answers.push_back(gj.value("answer", ""));
        gold_by_id[id] = {gj.value("question", ""), answers};
    }

    std::vector<std::string> missing;
    for (const auto& [id, g] : gold_by_id)
        if (!pred_by_id.count(id)) missing.push_back("missing prediction for id " + id);
    for (const auto& [id, p] : pred_by_id)
        if (!gold_by_id.count(id)) missing.push_back("prediction for unknown id " + id);
    if (!missing.empty()) {
        for (const auto& m : missing) std::cerr << m << "\n";
        return kExitRuntime;
    }

    std::ofstream out;
    if (!out_path.empty()) out.open(out_path, std::ios::binary);

    // parallel scoring, ordered emission
    struct Row {
        std::string id;
        int em = 0;
        evorag::eval::Prf prf;
        std::exception_ptr error;
    };
    std::vector<Row> rows;
    rows.reserve(gold_by_id.size());
    for (const auto& [id, gold] : gold_by_id) rows.push_back({id, 0, {}, nullptr});
    evorag::graph::detail::parallel_for(rows.size(), config.workers, [&](std::size_t i) {
        try {
            const auto& gold = gold_by_id.at(rows[i].id);
            const std::string& prediction = pred_by_id.at(rows[i].id);
            rows[i].em = evorag::eval::exact_match(prediction, gold.second);
            rows[i].prf = evorag::eval::f1_prf(prediction, gold.second);
        } catch (...) {
            rows[i].error = std::current_exception();
        }
    });

    double em_sum = 0, f1_sum = 0, p_sum = 0, r_sum = 0;
    for (const auto& row : rows) {
        if (row.error) std::rethrow_exception(row.error);
        em_sum += row.em;
        f1_sum += row.prf.f1;
        p_sum += row.prf.precision;
        r_sum += row.prf.recall;
        if (out.is_open())
            out << json{{"id", row.id},
                        {"em", row.em},
                        {"f1", row.prf.f1},
                        {"precision", row.prf.precision},
                        {"recall", row.prf.recall}}
                       .dump()
                << "\n";
    }
    double n = static_cast<double>(gold_by_id.size());
    if (n == 0) {
        std::cerr << "no items to score\n";
        return kExitRuntime;
    }
    if (out.is_open())
        out << json{{"aggregate", true},
                    {"items", gold_by_id.size()},
                    {"em", em_sum / n},
                    {"f1", f1_sum / n},
                    {"precision", p_sum / n},
                    {"recall", r_sum / n}}
                   .dump()
            << "\n";

    std::printf("items:     %zu\n", gold_by_id.size());
    std::printf("EM:        %.4f\n", em_sum / n);
    std::printf("F1:        %.4f\n", f1_sum / n);
    std::printf("precision: %.4f\n", p_sum / n);
    std::printf("recall:    %.4f\n", r_sum / n);
    return kExitOk;
}

evorag::eval::Winner winner_from_string(const std::string& s) {
    if (s == "A" || s == "a") return evorag::eval::Winner::A;
    if (s == "B" || s == "b") return evorag::eval::Winner::B;
    return evorag::eval::Winner::Tie;
}

int cmd_elo(const evorag::EngineConfig& config, const std::vector<std::string>& results_files,
            const std::string& questions_path, const std::string& answers_a_path,
            const std::string& answers_b_path, const std::string& method_a,
            const std::string& method_b, std::string reference, const std::string& out_path,
            const std::string& matrix_out_path) {
    std::vector<evorag::eval::LabeledVerdict> verdicts;

    if (!results_files.empty()) {
        for (const auto& file : results_files) {
            for (const auto& rec : read_jsonl(file)) {
                evorag::eval::LabeledVerdict lv;
                lv.method_a = rec.value("method_a", "");
                lv.method_b = rec.value("method_b", "");
                if (lv.method_a.empty() || lv.method_b.empty())
                    throw evorag::Error(file + ": record lacks method_a/method_b");
                if (rec.value("invalid", false)) {
                    lv.verdict.valid = false;
                } else {
                    lv.verdict.winners["Comprehensiveness"] =
                        winner_from_string(rec.value("comprehensiveness", "tie"));
                    lv.verdict.winners["Diversity"] =
                        winner_from_string(rec.value("diversity", "tie"));
                    lv.verdict.winners["Empowerment"] =
                        winner_from_string(rec.value("empowerment", "tie"));
                    lv.verdict.winners["Overall"] = winner_from_string(rec.value("overall", "tie"));
                }
                verdicts.push_back(std::move(lv));
            }
        }
    } else {
        auto questions = read_jsonl(questions_path);
        auto answers_a = read_jsonl(answers_a_path);
        auto answers_b = read_jsonl(answers_b_path);
        std::map<std::string, std::string> a_by_id, b_by_id;
        for (const auto& a : answers_a) a_by_id[a.value("id", "")] = a.value("answer", "");
        for (const auto& b : answers_b) b_by_id[b.value("id", "")] = b.value("answer", "");

        auto backend = config.make_backend(/*judge=*/true);
        auto prompts = config.prompt_library();
        for (const auto& q : questions) {
            std::string id = q.value("id", "");
            if (!a_by_id.count(id) || !b_by_id.count(id))
                throw evorag::Error("no answers for question id " + id);
        }
        // judge calls run in parallel up to the backend's own rate limit;
        // verdicts keep question-file order
        verdicts.resize(questions.size());
        std::vector<std::exception_ptr> errors(questions.size());
        evorag::graph::detail::parallel_for(questions.size(), config.workers,
                                            [&](std::size_t i) {
            try {
                std::string id = questions[i].value("id", "");
                evorag::eval::LabeledVerdict lv;
                lv.method_a = method_a;
                lv.method_b = method_b;
                lv.verdict =
                    evorag::eval::judge_pairwise(questions[i].value("question", ""),
                                                 a_by_id.at(id), b_by_id.at(id), *backend,
                                                 prompts);
                verdicts[i] = std::move(lv);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        for (const auto& lv : verdicts) {
            json rec{{"method_a", lv.method_a}, {"method_b", lv.method_b}};
            if (!lv.verdict.valid) {
                rec["invalid"] = true;
            } else {
                rec["comprehensiveness"] =
                    winner_name(lv.verdict.winners.at("Comprehensiveness"));
                rec["diversity"] = winner_name(lv.verdict.winners.at("Diversity"));
                rec["empowerment"] = winner_name(lv.verdict.winners.at("Empowerment"));
                rec["overall"] = winner_name(lv.verdict.winners.at("Overall"));
            }
            out << rec.dump() << "\n";
        }
    }

    if (verdicts.empty()) throw evorag::Error("no comparisons provided");
    if (reference.empty()) {
        reference = verdicts.front().method_a;
        for (const auto& lv : verdicts) {
            reference = std::min(reference, lv.method_a);
            reference = std::min(reference, lv.method_b);
        }
    }
    auto report = evorag::eval::aggregate_winrates(verdicts, reference);

    if (!matrix_out_path.empty()) {
        std::ofstream out(matrix_out_path, std::ios::binary);
        for (const char* dim : evorag::eval::kDimensions) {
            for (const auto& row : report.methods) {
                for (const auto& col : report.methods) {
                    auto it = report.rates[dim].find({row, col});
                    if (it == report.rates[dim].end()) continue;
                    out << json{{"dimension", dim},
                                {"method", row},
                                {"opponent", col},
                                {"win_rate", it->second}}
                               .dump()
                        << "\n";
                }
            }
        }
        for (const auto& [method, rating] : report.ratings)
            out << json{{"method", method}, {"rating", rating}}.dump() << "\n";
    }

    for (const char* dim : evorag::eval::kDimensions) {
        std::printf("win rates (%s):\n", dim);
        std::printf("%-16s", "");
        for (const auto& col : report.methods) std::printf("%-16s", col.c_str());
        std::printf("\n");
        for (const auto& row : report.methods) {
            std::printf("%-16s", row.c_str());
            for (const auto& col : report.methods) {
                auto it = report.rates[dim].find({row, col});
                if (it == report.rates[dim].end()) std::printf("%-16s", "-");
                else std::printf("%-16.3f", it->second);
            }
            std::printf("\n");
        }
        std::printf("\n");
    }
    std::printf("ELO ratings (reference %s = 1600):\n", report.reference.c_str());
    for (const auto& [method, rating] : report.ratings)
        std::printf("%-16s%.2f\n", method.c_str(), rating);
    if (report.invalid_comparisons)
        std::printf("invalid comparisons excluded: %zu\n", report.invalid_comparisons);
    return kExitOk;
}

int cmd_inspect(const evorag::EngineConfig& config, const std::string& index_dir,
                std::size_t samples) {
    std::string dir = index_dir.empty() ? config.index_path : index_dir;
    if (!fs::is_directory(dir)) {
        std::cerr << "index directory not found: " << dir << "\n";
        return kExitUsage;
    }
    auto g = evorag::graph::load_index(dir);
    std::cout << "chunks:      " << g.chunks().size() << "\n";
    std::cout << "entities:    " << g.entities().size() << "\n";
    std::cout << "triplets:    " << g.triplets().size() << "\n";
    std::cout << "communities: " << g.communities().size() << "\n";
    std::cout << "edges:       " << g.edges().size() << "\n";
    std::cout << "embeddings:  " << g.embeddings().size() << " (dim " << g.embedding_dim()
              << ")\n";

    std::size_t shown = 0;
    for (const auto& [id, c] : g.chunks()) {
        if (shown++ >= samples) break;
        std::cout << "chunk " << id << ": "
                  << (c.text.size() > 80 ? c.text.substr(0, 80) + "..." : c.text) << "\n";
    }
    shown = 0;
    for (const auto& [id, t] : g.triplets()) {
        if (shown++ >= samples) break;
        std::cout << "triplet " << id << ": " << t.subject << " -> " << t.predicate << " -> "
                  << t.object << "\n";
    }
    shown = 0;
    for (const auto& [id, c] : g.communities()) {
        if (shown++ >= samples) break;
        std::cout << "community " << id << " (level " << c.level << ", " << c.members.size()
                  << " members)\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-indexed retrieval engine with an evolving-context query loop"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "engine config file (JSON)");

    auto* index_cmd = app.add_subcommand("index", "build and persist an index from a corpus");
    std::string corpus_path, index_out;
    index_cmd->add_option("--corpus", corpus_path, "corpus directory or JSONL file")->required();
    index_cmd->add_option("--out", index_out, "output index directory");

    auto* query_cmd = app.add_subcommand("query", "answer one question against an index");
    std::string question, query_index, audit_path;
    bool always_synthesize = false;
    int max_rounds = 0;
    query_cmd->add_option("question", question, "the question to answer")->required();
    query_cmd->add_option("--index", query_index, "index directory");
    query_cmd->add_option("--audit", audit_path, "write a per-step audit log (JSONL)");
    query_cmd->add_flag("--always-synthesize", always_synthesize,
                        "synthesize the final answer even after a sufficient round");
    query_cmd->add_option("--max-rounds", max_rounds, "override the evolution horizon");

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold answers");
    std::string pred_path, gold_path, eval_out;
    eval_cmd->add_option("--pred", pred_path, "predictions JSONL (id, prediction)")->required();
    eval_cmd->add_option("--gold", gold_path, "gold JSONL (id, question, answers)")->required();
    eval_cmd->add_option("--out", eval_out, "write per-item metric records (JSONL)");

    auto* elo_cmd = app.add_subcommand("elo", "win-rate matrix and ELO ratings");
    std::vector<std::string> results_files;
    std::string questions_path, answers_a_path, answers_b_path, method_a, method_b, reference,
        elo_out;
    elo_cmd->add_option("--results", results_files, "pairwise verdict files (JSONL)");
    elo_cmd->add_option("--questions", questions_path, "questions JSONL (id, question)");
    elo_cmd->add_option("--answers-a", answers_a_path, "answers JSONL for method A");
    elo_cmd->add_option("--answers-b", answers_b_path, "answers JSONL for method B");
    elo_cmd->add_option("--method-a", method_a, "label for method A");
    elo_cmd->add_option("--method-b", method_b, "label for method B");
    elo_cmd->add_option("--reference", reference, "reference method pinned at 1600");
    elo_cmd->add_option("--out", elo_out, "write verdict records (JSONL)");
    std::string elo_matrix_out;
    elo_cmd->add_option("--matrix-out", elo_matrix_out,
                        "write win-rate matrix and rating records (JSONL)");

    auto* inspect_cmd = app.add_subcommand("inspect", "dump counts and sample records");
    std::string inspect_index;
    std::size_t samples = 3;
    inspect_cmd->add_option("--index", inspect_index, "index directory");
    inspect_cmd->add_option("--samples", samples, "sample records per node type");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        evorag::EngineConfig config = load_config(config_path);
        if (index_cmd->parsed()) return cmd_index(config, corpus_path, index_out);
        if (query_cmd->parsed())
            return cmd_query(config, question, query_index, audit_path, always_synthesize,
                             max_rounds);
        if (eval_cmd->parsed()) return cmd_eval(config, pred_path, gold_path, eval_out);
        if (elo_cmd->parsed()) {
            if (results_files.empty() &&
                (questions_path.empty() || answers_a_path.empty() || answers_b_path.empty() ||
                 method_a.empty() || method_b.empty())) {
                std::cerr << "elo needs --results files, or --questions/--answers-a/--answers-b "
                             "with --method-a/--method-b\n";
                return kExitUsage;
            }
            return cmd_elo(config, results_files, questions_path, answers_a_path, answers_b_path,
                           method_a, method_b, reference, elo_out, elo_matrix_out);
        }
        if (inspect_cmd->parsed()) return cmd_inspect(config, inspect_index, samples);
        return kExitUsage;
    } catch (const evorag::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
}
