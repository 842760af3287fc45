// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"

namespace ecsp {

/// Backend weights, normalized to sum 1.
class EnsembleConfig {
public:
    EnsembleConfig() = default;

    /// Errors: InvalidArgument for negative/non-finite weights or no positive weight.
    static EnsembleConfig from_weights(const std::map<std::string, double>& weights);
    static EnsembleConfig equal(std::span<const std::string> backend_ids);

    /// Reads `backend_id = weight` lines; blank lines and `#` comments are ignored.
    /// Errors: Parse(line), InvalidArgument, Io.
    static EnsembleConfig load(const std::filesystem::path& path);

    const std::map<std::string, double>& weights() const noexcept { return m_weights; }

private:
    std::map<std::string, double> m_weights;
};

struct Prediction {
    std::string sample_id;
    Probs fused_probs{};
    EmotionClass predicted;
    std::vector<std::string> contributing_backends;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Weighted mean of the configured backends' vectors; argmax ties go to the
/// lowest class index. Backends outside the config are ignored.
/// Errors: MissingBackend(id), InvalidVector(id).
Prediction fuse(std::string_view sample_id, const std::map<std::string, ProbabilityVector>& per_backend,
                const EnsembleConfig& config);

/// One vector per (sample, backend) in; one Prediction per sample out, ordered by sample_id.
/// Errors: fuse errors prefixed with the sample id; DuplicateVariant for repeated (sample, backend).
std::vector<Prediction> fuse_batch(std::span<const ProbabilityVector> rows, const EnsembleConfig& config);

std::string prediction_to_json_line(const Prediction& p);
Prediction prediction_from_json_line(std::string_view line);
void write_predictions_jsonl(std::span<const Prediction> predictions, const std::filesystem::path& path);
std::vector<Prediction> load_predictions_jsonl(const std::filesystem::path& path);

}  // namespace ecsp
