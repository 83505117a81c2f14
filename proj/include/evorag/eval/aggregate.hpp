#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/eval/elo.hpp"
#include "evorag/eval/pairwise.hpp"

namespace evorag::eval {

struct LabeledVerdict {
    std::string method_a;
    std::string method_b;
    PairwiseVerdict verdict;
};

struct WinRateReport {
    std::vector<std::string> methods;   // sorted
    // dimension -> (row method, column method) -> win rate of row over column;
    // diagonal fixed at 0.5
    std::map<std::string, std::map<std::pair<std::string, std::string>, double>> rates;
    std::string reference;
    std::map<std::string, double> ratings;   // from the Overall rate vs reference
    std::size_t valid_comparisons = 0;
    std::size_t invalid_comparisons = 0;
};

// Counts wins per ordered method pair and dimension (ties score 0.5 each),
// builds the win-rate matrix with a 0.5 diagonal, and converts each method's
// Overall rate against the reference into an ELO rating.
inline WinRateReport aggregate_winrates(const std::vector<LabeledVerdict>& verdicts,
                                        const std::string& reference) {
    WinRateReport report;
    report.reference = reference;

    std::set<std::string> methods;
    std::map<std::string, std::map<std::pair<std::string, std::string>, double>> wins;
    std::map<std::pair<std::string, std::string>, std::size_t> valid_count;
    std::set<std::pair<std::string, std::string>> seen_pairs;

    for (const auto& lv : verdicts) {
        methods.insert(lv.method_a);
        methods.insert(lv.method_b);
        auto key = lv.method_a < lv.method_b ? std::make_pair(lv.method_a, lv.method_b)
                                             : std::make_pair(lv.method_b, lv.method_a);
        seen_pairs.insert(key);
        if (!lv.verdict.valid) {
            ++report.invalid_comparisons;
            continue;
        }
        ++report.valid_comparisons;
        ++valid_count[key];
        for (const auto& [dim, winner] : lv.verdict.winners) {
            double a_score = winner == Winner::A ? 1.0 : winner == Winner::B ? 0.0 : 0.5;
            wins[dim][{lv.method_a, lv.method_b}] += a_score;
            wins[dim][{lv.method_b, lv.method_a}] += 1.0 - a_score;
        }
    }

    for (const auto& pair : seen_pairs)
        if (!valid_count.count(pair))
            throw NoValidComparisons(pair.first + " vs " + pair.second);

    report.methods.assign(methods.begin(), methods.end());
    for (const char* dim : kDimensions) {
        auto& matrix = report.rates[dim];
        for (const auto& a : report.methods) {
            for (const auto& b : report.methods) {
                if (a == b) {
                    matrix[{a, b}] = 0.5;
                    continue;
                }
                auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
                auto cnt = valid_count.find(key);
                if (cnt == valid_count.end()) continue;   // pair never compared
                matrix[{a, b}] = wins[dim][{a, b}] / static_cast<double>(cnt->second);
            }
        }
    }

    if (methods.count(reference)) {
        report.ratings[reference] = kReferenceRating;
        const auto& overall = report.rates["Overall"];
        for (const auto& m : report.methods) {
            if (m == reference) continue;
            auto it = overall.find({m, reference});
            if (it == overall.end()) continue;
            // a clean sweep has no finite rating; leave the method unrated
            if (it->second <= 0.0 || it->second >= 1.0) continue;
            report.ratings[m] = elo_from_winrate(it->second);
        }
    }
    return report;
}

} // namespace evorag::eval
