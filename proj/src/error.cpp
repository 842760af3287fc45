// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/error.hpp"

namespace ecsp {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::Parse: return "ParseError";
        case ErrorCode::Validation: return "ValidationError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownEmotion: return "UnknownEmotion";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::UnlabeledPoolRecord: return "UnlabeledPoolRecord";
        case ErrorCode::EmptyPool: return "EmptyPool";
        case ErrorCode::MissingLanguageIndex: return "MissingLanguageIndex";
        case ErrorCode::EmptyAfterExclusion: return "EmptyAfterExclusion";
        case ErrorCode::IdMismatch: return "IdMismatch";
        case ErrorCode::InvalidSize: return "InvalidSize";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::CropOutOfBounds: return "CropOutOfBounds";
        case ErrorCode::MixedSample: return "MixedSample";
        case ErrorCode::DuplicateVariant: return "DuplicateVariant";
        case ErrorCode::MissingBackend: return "MissingBackend";
        case ErrorCode::InvalidVector: return "InvalidVector";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::BadRow: return "BadRow";
        case ErrorCode::NotOnSimplex: return "NotOnSimplex";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::Protocol: return "ProtocolError";
        case ErrorCode::Internal: return "InternalError";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ecsp
