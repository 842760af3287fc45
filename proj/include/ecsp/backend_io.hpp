// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"
#include "ecsp/promptgen.hpp"
#include "ecsp/tta.hpp"

namespace ecsp {

inline constexpr std::size_t kUnimodalMaxTokens = 90;
inline constexpr std::size_t kMultimodalMaxTokens = 100;
inline constexpr unsigned kDefaultMaxInFlight = 8;

enum class BackendMode { File, Remote };

std::string_view backend_mode_name(BackendMode m) noexcept;
BackendMode backend_mode_from_name(std::string_view name);

struct RetryPolicy {
    unsigned attempts = 3;
    std::chrono::milliseconds initial_backoff{250};  // doubled after each failed attempt
    std::chrono::milliseconds timeout{10000};        // per attempt, connect and read
};

struct BackendDescriptor {
    std::string backend_id;
    BackendMode mode = BackendMode::File;
    std::string location;  // probability JSONL path, or base URL such as http://127.0.0.1:8080
    std::size_t max_tokens = kUnimodalMaxTokens;
    bool expects_image = false;
    RetryPolicy retry;
};

/// Checks a raw probability row: entries finite and non-negative, sum within
/// kSimplexTolerance of 1. Accepted rows are divided by their sum unless they
/// already sum to 1 within 1e-12.
/// Errors: NotOnSimplex (message prefixed with `where`).
Probs validate_probs(const Probs& raw, std::string_view where);

/// Reads probability JSONL: {sample_id, backend_id, variant_id, probs:[9]}.
/// Errors: BadRow(line) for malformed rows or wrong arity, NotOnSimplex(line), Io.
std::vector<ProbabilityVector> load_backend_outputs(const std::filesystem::path& path);

std::string probability_to_json_line(const ProbabilityVector& v);
void write_backend_outputs(std::span<const ProbabilityVector> vectors, const std::filesystem::path& path);

struct PredictionRequest {
    PromptArtifact prompt;
    std::optional<TtaVariant> variant;
    std::optional<std::string> image_ref;
};

/// Request body for POST /predict.
std::string request_body(const PredictionRequest& request);

/// POST {location}/predict. Transport failures are retried per descriptor.retry;
/// any non-200 status is a ProtocolError without retry.
/// Errors: Timeout, Protocol(status), NotOnSimplex, InvalidArgument.
ProbabilityVector request_prediction(const BackendDescriptor& descriptor, const PromptArtifact& prompt,
                                     const TtaVariant* variant, const std::optional<std::string>& image_ref);

/// Issues the requests with at most `max_in_flight` outstanding; results follow input order.
std::vector<ProbabilityVector> request_batch(const BackendDescriptor& descriptor,
                                             std::span<const PredictionRequest> requests,
                                             unsigned max_in_flight = kDefaultMaxInFlight);

/// GET {location}/healthz == 200.
bool backend_healthy(const BackendDescriptor& descriptor);

}  // namespace ecsp
