// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecsp {

// Numeric values are part of the C ABI (see ecsp.h) and must not be reordered.
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    Validation = 4,
    DuplicateId = 5,
    UnknownEmotion = 6,
    DimensionMismatch = 7,
    ZeroVector = 8,
    CorruptFile = 9,
    UnlabeledPoolRecord = 10,
    EmptyPool = 11,
    MissingLanguageIndex = 12,
    EmptyAfterExclusion = 13,
    IdMismatch = 14,
    InvalidSize = 15,
    ShapeMismatch = 16,
    CropOutOfBounds = 17,
    MixedSample = 18,
    DuplicateVariant = 19,
    MissingBackend = 20,
    InvalidVector = 21,
    EmptyInput = 22,
    BadRow = 23,
    NotOnSimplex = 24,
    Timeout = 25,
    Protocol = 26,
    Internal = 99,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace ecsp
