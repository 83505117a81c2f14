#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evorag/errors.hpp"

namespace evorag::ingest {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

namespace detail {

inline bool valid_utf8(const std::string& s) {
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        if (c < 0x80) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        else return false;
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        i += len;
    }
    return true;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorpusReadError("cannot open " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace detail

// Loads a corpus from either a directory of .txt files (doc_id = file stem)
// or a single line-delimited file whose records carry id / title / text.
// Documents come back sorted by doc_id.
inline std::vector<Document> load_corpus(const std::string& path) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (!fs::exists(p))
        throw CorpusReadError("corpus path does not exist: " + path);

    std::vector<Document> docs;
    std::set<std::string> seen;

    auto push = [&](Document d, const std::string& where) {
        if (d.doc_id.empty())
            throw CorpusReadError("empty document id in " + where);
        if (d.body.empty())
            throw CorpusReadError("empty document body in " + where);
        if (!detail::valid_utf8(d.body) || !detail::valid_utf8(d.title))
            throw CorpusReadError("invalid UTF-8 in " + where);
        if (!seen.insert(d.doc_id).second)
            throw DuplicateDocId(d.doc_id);
        docs.push_back(std::move(d));
    };

    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(p))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            Document d;
            d.doc_id = f.stem().string();
            d.body = detail::read_file(f);
            push(std::move(d), f.string());
        }
    } else {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw CorpusReadError("cannot open " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.is_object())
                throw CorpusReadError(path + " line " + std::to_string(line_no) +
                                      ": not a JSON record");
            Document d;
            d.doc_id = rec.value("id", "");
            d.title = rec.value("title", "");
            d.body = rec.value("text", "");
            push(std::move(d), path + " line " + std::to_string(line_no));
        }
    }

    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    return docs;
}

} // namespace evorag::ingest
