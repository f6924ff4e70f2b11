#ifndef FIST_ERROR_HPP
#define FIST_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace fist {

/// Failure categories surfaced by the library, CLI and HTTP service.
enum class ErrorCode {
    MalformedId,
    SchemaError,
    IntegrityError,
    NotFound,
    UnknownTechnique,
    PhaseMismatch,
    UnknownDetection,
    DuplicateIncidentId,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedId: return "MalformedId";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IntegrityError: return "IntegrityError";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::UnknownTechnique: return "UnknownTechnique";
        case ErrorCode::PhaseMismatch: return "PhaseMismatch";
        case ErrorCode::UnknownDetection: return "UnknownDetection";
        case ErrorCode::DuplicateIncidentId: return "DuplicateIncidentId";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/**
 * Exception carrying a machine-readable code and the subject it concerns
 * (usually an entity or incident id, possibly empty).
 */
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string subject, const std::string& message)
        : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

} // namespace fist

#endif
