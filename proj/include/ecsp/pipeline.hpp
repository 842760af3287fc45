// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecsp/backend_io.hpp"
#include "ecsp/ensemble.hpp"
#include "ecsp/ingest.hpp"
#include "ecsp/metrics.hpp"
#include "ecsp/promptgen.hpp"
#include "ecsp/retrieval.hpp"
#include "ecsp/tta.hpp"

namespace ecsp {

/// "all" (nullopt) or one split name.
std::optional<Split> split_selector(std::string_view name);
bool selected(const AnnotationRecord& record, std::optional<Split> split) noexcept;

/// "768x768" style sizes. Errors: InvalidArgument, InvalidSize for a zero side.
ImageSize parse_image_size(std::string_view text);

RetrievalIndex build_pool_index(std::span<const AnnotationRecord> records, std::span<const JointEmbedding> embeddings,
                                IndexOptions options = {});

/// Retrieval outcomes for the selected records, in annotation order.
/// Errors: Validation when a selected record has no embedding, plus retrieve errors.
std::vector<RetrievalOutcome> retrieve_records(const RetrievalIndex& index, std::span<const AnnotationRecord> records,
                                               std::span<const JointEmbedding> embeddings, std::optional<Split> split,
                                               RetrieveParams params, bool exclude_self);

struct PromptStageOptions {
    PromptVariant variant = PromptVariant::Ecsp;
    std::size_t max_tokens = 0;  // 0 disables truncation
    PromptOptions render;
};

/// Prompts for the selected records, in annotation order. Outcomes are matched
/// by query id and are required for the pl and ecsp variants.
std::vector<PromptArtifact> render_records(std::span<const AnnotationRecord> records,
                                           std::span<const RetrievalOutcome> outcomes, std::optional<Split> split,
                                           const PromptStageOptions& options);

/// Plans for the selected records. The source size is the record's image size
/// when known, otherwise the target size.
std::vector<TtaPlan> plan_records(std::span<const AnnotationRecord> records, std::optional<Split> split,
                                  ImageSize target, double crop_fraction, std::uint64_t seed);

/// Reduces each (sample, backend) group to one vector. With `tta` the group is
/// averaged by aggregate_tta; without it a lone row is kept as is and larger
/// groups keep their identity row. Output is ordered by (sample_id, backend_id).
std::vector<ProbabilityVector> collapse_variants(std::span<const ProbabilityVector> rows, bool tta);

/// Loads probability files, collapses variants, and fuses. Without a config,
/// every backend seen in the files gets equal weight.
std::vector<Prediction> fuse_files(std::span<const std::filesystem::path> probability_files,
                                   const std::optional<EnsembleConfig>& config, bool tta);

struct ScoreResult {
    Scores overall;
    std::vector<ReportRow> rows;  // overall first, then one per language when requested
    std::string table;
};

/// Errors: Validation when a prediction's sample is unknown or has no gold label; EmptyInput.
ScoreResult score_predictions(std::span<const Prediction> predictions, std::span<const AnnotationRecord> records,
                              Average average, bool by_language, const std::string& method);

struct RunConfig {
    std::filesystem::path annotations;
    std::optional<AnnotationFormat> annotations_format;
    std::filesystem::path embeddings;
    std::filesystem::path output_dir = "ecsp_out";
    double eta = kDefaultEta;
    std::size_t k = kDefaultK;
    bool exclude_self = true;
    bool normalize_parts = false;
    PromptVariant prompt_variant = PromptVariant::Ecsp;
    bool duplicate_utterance = false;
    std::optional<Split> query_split = Split::Test;
    bool tta = true;
    std::uint64_t seed = 0;
    double crop_fraction = kDefaultCropFraction;
    ImageSize target = kDefaultTargetSize;
    std::optional<std::filesystem::path> ensemble;
    std::string method = "ensemble";
    Average average = Average::Macro;
    unsigned max_in_flight = kDefaultMaxInFlight;
    std::vector<BackendDescriptor> backends;

    /// Key-value file (`key = value`, `#` comments). Relative paths resolve
    /// against the file's directory. Backends use `backend.<id>.<field>` keys
    /// with fields mode, location, max_tokens, expects_image, timeout_ms.
    /// Errors: Parse(line), InvalidArgument, Io.
    static RunConfig load(const std::filesystem::path& path);

    /// Applies one `key = value` setting; the same keys as the file format, plus
    /// `remote = URL`, which switches every backend defined so far to remote mode.
    void set(const std::string& key, const std::string& value, const std::filesystem::path& base_dir = {});
};

struct RunSummary {
    std::filesystem::path predictions_path;
    std::size_t predictions = 0;
    std::optional<Scores> scores;
    std::string table;
};

/// ingest -> index -> retrieve -> prompt -> tta-plan -> backends -> fuse -> score.
/// Stage outputs land in config.output_dir with fixed file names.
RunSummary run_pipeline(const RunConfig& config);

}  // namespace ecsp
