#pragma once

#include <string>
#include <vector>

#include "evorag/errors.hpp"
#include "evorag/ingest/corpus.hpp"
#include "evorag/ingest/tokenizer.hpp"

namespace evorag::ingest {

struct Chunk {
    std::string chunk_id;   // doc_id + ":" + ordinal
    std::string doc_id;
    std::string text;
    std::size_t token_start = 0;
    std::size_t token_count = 0;
};

struct ChunkParams {
    std::size_t chunk_size = 1024;
    std::size_t overlap = 20;
    // When set, a window boundary that is not the document end moves backward
    // to the nearest sentence-ending token ('.', '!', '?'), never by more than
    // `overlap` tokens. Off by default; the closed-form chunk-count law holds
    // only for the default mode.
    bool snap_to_sentence = false;
};

inline bool ends_sentence(const std::string& text, const TokenSpan& span) {
    if (span.end - span.begin != 1) return false;
    char c = text[span.begin];
    return c == '.' || c == '!' || c == '?';
}

// Overlapping token windows: window k starts at token k*(chunk_size-overlap),
// so consecutive chunks share exactly `overlap` tokens and every token is
// covered. Chunk text is the byte range spanning its tokens.
inline std::vector<Chunk> split_into_chunks(const Document& doc, const ChunkParams& params = {},
                                            const Tokenizer& tokenizer = default_tokenizer()) {
    if (params.chunk_size == 0)
        throw InvalidChunkParams("chunk_size must be positive");
    if (params.overlap >= params.chunk_size)
        throw InvalidChunkParams("overlap must be smaller than chunk_size");

    std::vector<TokenSpan> spans = tokenizer.tokenize(doc.body);
    std::vector<Chunk> chunks;
    const std::size_t total = spans.size();
    if (total == 0) return chunks;

    std::size_t start = 0;
    std::size_t ordinal = 0;
    while (true) {
        std::size_t cover = std::min(start + params.chunk_size, total);
        if (params.snap_to_sentence && cover < total) {
            std::size_t low = cover > params.overlap ? cover - params.overlap : 0;
            if (low <= start) low = start + 1;
            for (std::size_t j = cover; j > low; --j) {
                if (ends_sentence(doc.body, spans[j - 1])) {
                    cover = j;
                    break;
                }
            }
        }
        Chunk c;
        c.doc_id = doc.doc_id;
        c.chunk_id = doc.doc_id + ":" + std::to_string(ordinal);
        c.token_start = start;
        c.token_count = cover - start;
        c.text = doc.body.substr(spans[start].begin, spans[cover - 1].end - spans[start].begin);
        chunks.push_back(std::move(c));
        if (cover >= total) break;
        std::size_t next = cover - params.overlap;
        if (next <= start) next = start + 1;
        start = next;
        ++ordinal;
    }
    return chunks;
}

// Closed form for the default (non-snapping) mode.
inline std::size_t expected_chunk_count(std::size_t total_tokens, std::size_t chunk_size,
                                        std::size_t overlap) {
    if (total_tokens == 0) return 0;
    if (total_tokens <= chunk_size) return 1;
    std::size_t stride = chunk_size - overlap;
    return 1 + (total_tokens - chunk_size + stride - 1) / stride;
}

} // namespace evorag::ingest
