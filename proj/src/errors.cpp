// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "vecplan/errors.hpp"

namespace vecplan {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedBoundary: return "MalformedBoundary";
    case ErrorCode::TooManyRooms: return "TooManyRooms";
    case ErrorCode::InvalidCategory: return "InvalidCategory";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidScheduleParams: return "InvalidScheduleParams";
    case ErrorCode::EmptyElementMap: return "EmptyElementMap";
    case ErrorCode::ConditioningMismatch: return "ConditioningMismatch";
    case ErrorCode::NonFiniteOutput: return "NonFiniteOutput";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DatasetStageMismatch: return "DatasetStageMismatch";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UndefinedRatio: return "UndefinedRatio";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace vecplan
