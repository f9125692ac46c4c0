#include "vip/common/error.hpp"

namespace vip {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::UnknownElement: return "UnknownElement";
        case ErrorCode::AlreadyTripped: return "AlreadyTripped";
        case ErrorCode::IslandingDetected: return "IslandingDetected";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::InfeasibleStart: return "InfeasibleStart";
        case ErrorCode::PairMismatch: return "PairMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::SequenceLengthMismatch: return "SequenceLengthMismatch";
        case ErrorCode::MissingCache: return "MissingCache";
        case ErrorCode::CaseTooShort: return "CaseTooShort";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Config: return "Config";
        case ErrorCode::RetryBudgetExceeded: return "RetryBudgetExceeded";
    }
    return "Unknown";
}

}  // namespace vip
