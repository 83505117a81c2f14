#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace evorag::eval {

namespace detail {

inline bool is_ascii_punct(char c) {
    static const std::string punct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
    return punct.find(c) != std::string::npos;
}

} // namespace detail

// Standard QA answer normalization: lowercase, strip punctuation, drop the
// articles a/an/the, collapse whitespace.
inline std::string normalize_answer(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (!detail::is_ascii_punct(c)) lowered.push_back(c);
    }
    std::istringstream iss(lowered);
    std::string token, out;
    while (iss >> token) {
        if (token == "a" || token == "an" || token == "the") continue;
        if (!out.empty()) out += ' ';
        out += token;
    }
    return out;
}

inline std::vector<std::string> answer_tokens(const std::string& text) {
    std::istringstream iss(normalize_answer(text));
    std::vector<std::string> tokens;
    std::string token;
    while (iss >> token) tokens.push_back(token);
    return tokens;
}

inline int exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty())
        throw std::invalid_argument("exact_match: golds must be non-empty");
    std::string p = normalize_answer(prediction);
    for (const auto& g : golds)
        if (p == normalize_answer(g)) return 1;
    return 0;
}

struct Prf {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Token-multiset overlap on normalized text; the best (f1, precision, recall)
// tuple across golds. Empty-vs-empty scores (1,1,1), empty-vs-nonempty
// (0,0,0).
inline Prf f1_prf(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty())
        throw std::invalid_argument("f1_prf: golds must be non-empty");
    std::vector<std::string> pred = answer_tokens(prediction);

    Prf best;
    bool first = true;
    for (const auto& g : golds) {
        std::vector<std::string> gold = answer_tokens(g);
        Prf cur;
        if (pred.empty() && gold.empty()) {
            cur = {1.0, 1.0, 1.0};
        } else if (pred.empty() || gold.empty()) {
            cur = {0.0, 0.0, 0.0};
        } else {
            std::map<std::string, int> counts;
            for (const auto& t : gold) counts[t]++;
            int overlap = 0;
            for (const auto& t : pred) {
                auto it = counts.find(t);
                if (it != counts.end() && it->second > 0) {
                    ++overlap;
                    --it->second;
                }
            }
            cur.precision = static_cast<double>(overlap) / pred.size();
            cur.recall = static_cast<double>(overlap) / gold.size();
            cur.f1 = overlap == 0 ? 0.0
                                  : 2.0 * cur.precision * cur.recall /
                                        (cur.precision + cur.recall);
        }
        auto as_tuple = [](const Prf& x) { return std::tie(x.f1, x.precision, x.recall); };
        if (first || as_tuple(cur) > as_tuple(best)) {
            best = cur;
            first = false;
        }
    }
    return best;
}

} // namespace evorag::eval
