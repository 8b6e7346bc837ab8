#pragma once

#include <stdexcept>
#include <string>

namespace chemrag {

// Base for all toolkit errors. Subclasses exist so callers can tell apart
// bad configuration, missing resources, transport failures, and bad inputs
// without string matching.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user/config input (bad flags, malformed records, schema violations).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// A referenced resource (store, index, profile, snippet) does not exist.
class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& msg) : Error(msg) {}
};

// Misconfiguration detected at use time (profile mismatch, missing template,
// HTTP 4xx from an endpoint).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Network / endpoint failure after retries were exhausted.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg) : Error(msg) {}
};

// Data that violates an internal contract (dimension drift, corrupt index,
// degenerate embeddings).
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Index construction over zero snippets.
class EmptyCorpusError : public ValidationError {
public:
    explicit EmptyCorpusError(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace chemrag
