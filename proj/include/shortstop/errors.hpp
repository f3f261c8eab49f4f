#pragma once

#include <stdexcept>
#include <string>

namespace shortstop {

// Every failure the pipeline can raise, by name. Grouped so the CLI can map a
// thrown Error onto its exit-status contract (0 ok, 2 config, 3 backend, 4 data).
enum class Errc {
    // configuration / usage
    ConfigError,
    // problem-set validation
    DuplicateId,
    MissingGold,
    MixedSpec,
    // transport
    ConnectFailed,
    HttpStatus,
    MalformedEvent,
    Disconnected,
    BackendUnavailable,
    // embeddings
    DimensionMismatch,
    ZeroVector,
    EmbeddingFailure,
    // orchestration / traces
    AllAttemptsErrored,
    IoError,
    SchemaMismatch,
    // selection / grading
    NoCompletedAttempt,
    NotApplicable,
    TooFewSolutions,
    NoValidAnswers,
    PolicyMismatch,
    RunnerTimeout,
    RunnerSpawnFailed,
    // analysis
    EmptyInput,
    NoEligiblePairs,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::ConfigError: return "ConfigError";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::MissingGold: return "MissingGold";
        case Errc::MixedSpec: return "MixedSpec";
        case Errc::ConnectFailed: return "ConnectFailed";
        case Errc::HttpStatus: return "HttpStatus";
        case Errc::MalformedEvent: return "MalformedEvent";
        case Errc::Disconnected: return "Disconnected";
        case Errc::BackendUnavailable: return "BackendUnavailable";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::EmbeddingFailure: return "EmbeddingFailure";
        case Errc::AllAttemptsErrored: return "AllAttemptsErrored";
        case Errc::IoError: return "IoError";
        case Errc::SchemaMismatch: return "SchemaMismatch";
        case Errc::NoCompletedAttempt: return "NoCompletedAttempt";
        case Errc::NotApplicable: return "NotApplicable";
        case Errc::TooFewSolutions: return "TooFewSolutions";
        case Errc::NoValidAnswers: return "NoValidAnswers";
        case Errc::PolicyMismatch: return "PolicyMismatch";
        case Errc::RunnerTimeout: return "RunnerTimeout";
        case Errc::RunnerSpawnFailed: return "RunnerSpawnFailed";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NoEligiblePairs: return "NoEligiblePairs";
    }
    return "UnknownError";
}

// CLI exit status for an error class: 2 config, 3 backend, 4 data.
inline int errc_exit_code(Errc c) {
    switch (c) {
        case Errc::ConfigError:
            return 2;
        case Errc::ConnectFailed:
        case Errc::HttpStatus:
        case Errc::MalformedEvent:
        case Errc::Disconnected:
        case Errc::BackendUnavailable:
        case Errc::EmbeddingFailure:
        case Errc::RunnerTimeout:
        case Errc::RunnerSpawnFailed:
            return 3;
        default:
            return 4;
    }
}

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + std::move(message)),
          code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace shortstop
