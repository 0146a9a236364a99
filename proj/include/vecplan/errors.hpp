// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vecplan {

enum class ErrorCode {
    InvalidArgument,
    MalformedBoundary,
    TooManyRooms,
    InvalidCategory,
    ShapeMismatch,
    InvalidScheduleParams,
    EmptyElementMap,
    ConditioningMismatch,
    NonFiniteOutput,
    VersionMismatch,
    CorruptCheckpoint,
    CorruptRecord,
    GenerationExhausted,
    NonFiniteLoss,
    DatasetStageMismatch,
    MissingCheckpoint,
    DegenerateInput,
    UndefinedRatio,
    TooFewSamples,
    Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) { }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace vecplan
