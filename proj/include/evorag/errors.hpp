#pragma once

#include <stdexcept>
#include <string>

namespace evorag {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// llm gateway
class TransportError : public Error {
public:
    using Error::Error;
};

class EmptyCompletion : public Error {
public:
    EmptyCompletion() : Error("backend returned an empty completion") {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("embedding dimension mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(got)) {}
};

class ScriptParseError : public Error {
public:
    ScriptParseError(std::size_t line, const std::string& what)
        : Error("script parse error at line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// ingest
class CorpusReadError : public Error {
public:
    using Error::Error;
};

class DuplicateDocId : public Error {
public:
    explicit DuplicateDocId(const std::string& doc_id)
        : Error("duplicate document id: " + doc_id) {}
};

class InvalidChunkParams : public Error {
public:
    using Error::Error;
};

// extraction
class ExtractionParseFailure : public Error {
public:
    explicit ExtractionParseFailure(const std::string& what) : Error(what) {}
};

// graph index
class DanglingReference : public Error {
public:
    using Error::Error;
};

class IndexFormatError : public Error {
public:
    using Error::Error;
};

// retrieval
class EmptyIndex : public Error {
public:
    EmptyIndex() : Error("index contains no embedded nodes") {}
};

// eval
class DomainError : public Error {
public:
    using Error::Error;
};

class NoValidComparisons : public Error {
public:
    explicit NoValidComparisons(const std::string& pair)
        : Error("no valid comparisons for pair " + pair) {}
};

// cli / config
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace evorag
