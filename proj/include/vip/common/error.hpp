#pragma once

#include <stdexcept>
#include <string>

namespace vip {

enum class ErrorCode {
    InvalidModel,
    UnknownElement,
    AlreadyTripped,
    IslandingDetected,
    NonConvergence,
    InfeasibleStart,
    PairMismatch,
    ShapeMismatch,
    SequenceLengthMismatch,
    MissingCache,
    CaseTooShort,
    EmptyDataset,
    DivergedLoss,
    CorruptCheckpoint,
    DimensionMismatch,
    Io,
    Config,
    RetryBudgetExceeded,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace vip
