#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphrag {

enum class ErrorCode {
    Parse,
    DanglingType,
    EmptySchema,
    UnknownKey,
    InvalidEntityType,
    UnknownNode,
    UnknownChunk,
    VersionMismatch,
    CorruptedRecord,
    UndefinedModularity,
    EmptyInput,
    Transport,
    DimensionMismatch,
    FailureThreshold,
    Config,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by model clients for retryable failures (connection refused, 5xx, 429).
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message) : Error(ErrorCode::Transport, message) {}
};

}  // namespace graphrag
