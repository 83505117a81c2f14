#pragma once

#include <set>
#include <string>
#include <vector>

namespace evorag::extract {

// Trim + collapse internal whitespace runs to single spaces; keeps casing.
inline std::string collapse_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

inline std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

// Case-insensitive identity key. Idempotent: canonical_key(canonical_key(x))
// == canonical_key(x).
inline std::string canonical_key(const std::string& name) {
    return ascii_lower(collapse_whitespace(name));
}

struct EntityRecord {
    std::string name;          // display form: first-seen casing, whitespace-collapsed
    std::string entity_type;
    std::string description;
    std::set<std::string> aliases;   // other surface forms seen for the same key
};

struct TripletRecord {
    std::string subject;
    std::string predicate;
    std::string object;
    std::string subject_type;
    std::string object_type;
    std::string description;
    std::string source_chunk;
};

struct ExtractionResult {
    std::vector<EntityRecord> entities;
    std::vector<TripletRecord> relationships;
    int parse_attempts = 1;
};

// Canonical "entity1 -> entity2 -> relation -> relationship_description" line
// used for community summarization input.
inline std::string relationship_line(const TripletRecord& t) {
    return t.subject + " -> " + t.object + " -> " + t.predicate + " -> " + t.description;
}

// Canonical triple line used for evidence rendering and subgraph refinement.
inline std::string triple_line(const std::string& s, const std::string& p, const std::string& o) {
    return s + " -> " + p + " -> " + o;
}

} // namespace evorag::extract
