#pragma once

#include <stdexcept>
#include <string>

namespace factorml {

/// Error category, used by the CLI to pick exit codes and by tests to
/// assert on specific failure modes.
enum class ErrorKind {
    Ingestion,         // malformed CSV / update-stream input
    UnsupportedQuery,  // cyclic query, unknown relation, bad group-by
    Type,              // attribute kind mismatch
    Resource,          // materialization cap exceeded
    EmptyTrainingSet,  // zero tuples in the join result
    Singular,          // closed-form system not solvable
    Optimization,      // gradient descent diverged
    UndefinedMI,       // mutual information over empty counts
    UnsupportedAttribute,
    Config,            // bad project config / CLI arguments
    Internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char *error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Ingestion: return "ingestion";
        case ErrorKind::UnsupportedQuery: return "unsupported-query";
        case ErrorKind::Type: return "type";
        case ErrorKind::Resource: return "resource";
        case ErrorKind::EmptyTrainingSet: return "empty-training-set";
        case ErrorKind::Singular: return "singular";
        case ErrorKind::Optimization: return "optimization";
        case ErrorKind::UndefinedMI: return "undefined-mi";
        case ErrorKind::UnsupportedAttribute: return "unsupported-attribute";
        case ErrorKind::Config: return "config";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace factorml
