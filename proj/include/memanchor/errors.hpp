#pragma once

#include <stdexcept>
#include <string>

namespace memanchor {

// Base class for every error the engine raises. Callers that do not care
// about the specific failure can catch this one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateIdError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

// Referential-integrity failure: a node references an id that does not
// resolve, or a stored edge is inconsistent.
struct IntegrityError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

// Zero-length vector where a direction is required (cosine of a zero vector).
struct DegenerateVectorError : Error {
    using Error::Error;
};

struct InvalidInputError : Error {
    using Error::Error;
};

// Malformed file or document; the message carries the line/record position.
struct ParseError : Error {
    using Error::Error;
};

struct UnsupportedVersionError : Error {
    using Error::Error;
};

// Network / HTTP failure after retry exhaustion.
struct TransportError : Error {
    using Error::Error;
};

struct EmptyCompletionError : Error {
    using Error::Error;
};

// A model completion that should contain a JSON payload did not.
struct ExtractionParseError : Error {
    using Error::Error;
};

// Judge output contained both CORRECT and WRONG, or neither.
struct AmbiguousVerdictError : Error {
    using Error::Error;
};

// A bulk build aborted midway; the message names the last committed node.
struct PartialBuildError : Error {
    using Error::Error;
};

// QA item carries a category label outside the closed set.
struct CategoryError : Error {
    using Error::Error;
};

}  // namespace memanchor
