// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"

namespace ecsp {

inline constexpr double kDefaultEta = 0.75;
inline constexpr std::size_t kDefaultK = 1;

/// dot(a,b) / (|a| |b|) in double precision, clamped to [-1, 1].
/// Errors: DimensionMismatch, ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct IndexOptions {
    // Scale the image and text parts to unit norm before normalizing the joint vector.
    bool normalize_parts = false;
};

/// Exact-scan index over the labeled pool of one language. Entries are kept
/// sorted by id so that a forward scan with strict comparison breaks
/// similarity ties toward the smaller id.
class LanguageIndex {
public:
    LanguageIndex() = default;
    LanguageIndex(LanguageTag language, std::size_t dim) : m_language(std::move(language)), m_dim(dim) {}

    const LanguageTag& language() const noexcept { return m_language; }
    std::size_t dim() const noexcept { return m_dim; }
    std::size_t size() const noexcept { return m_ids.size(); }

    const std::string& id(std::size_t i) const { return m_ids[i]; }
    EmotionClass label(std::size_t i) const { return m_labels[i]; }
    std::span<const double> vector(std::size_t i) const { return {m_vectors.data() + i * m_dim, m_dim}; }

    /// Appends a unit-norm vector. Callers must insert in ascending id order.
    void append(std::string id, EmotionClass label, std::span<const double> unit_vector);

private:
    LanguageTag m_language;
    std::size_t m_dim = 0;
    std::vector<std::string> m_ids;
    std::vector<EmotionClass> m_labels;
    std::vector<double> m_vectors;  // row-major, size() x dim()
};

struct PoolEntry {
    const AnnotationRecord* record;
    const JointEmbedding* embedding;
};

class RetrievalIndex {
public:
    RetrievalIndex() = default;

    /// Partitions the pool by language and stores unit-normalized vectors.
    /// Errors: EmptyPool, UnlabeledPoolRecord(id), DimensionMismatch, ZeroVector, IdMismatch.
    static RetrievalIndex build(std::span<const PoolEntry> pool, IndexOptions options = {});

    const LanguageIndex* find(const LanguageTag& language) const;
    const std::map<LanguageTag, LanguageIndex>& languages() const noexcept { return m_languages; }
    const IndexOptions& options() const noexcept { return m_options; }
    std::size_t dim() const noexcept { return m_dim; }
    std::size_t image_dim() const noexcept { return m_image_dim; }

    /// Applies the index's normalization to a raw joint vector.
    /// Errors: DimensionMismatch, ZeroVector (both naming `id`).
    std::vector<double> prepare_query(std::span<const float> joint, const std::string& id) const;

    void save(const std::filesystem::path& path) const;
    static RetrievalIndex load(const std::filesystem::path& path);

    friend bool operator==(const RetrievalIndex& a, const RetrievalIndex& b);

private:
    std::map<LanguageTag, LanguageIndex> m_languages;
    IndexOptions m_options;
    std::size_t m_dim = 0;
    std::size_t m_image_dim = 0;
};

/// Joins train-split records with their embeddings.
/// Errors: Validation when a train record has no embedding.
std::vector<PoolEntry> train_pool(std::span<const AnnotationRecord> records, std::span<const JointEmbedding> embeddings);

struct Neighbor {
    std::string id;
    double similarity = 0.0;
    EmotionClass label;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct RetrievalOutcome {
    std::string query_id;
    std::vector<Neighbor> neighbors;           // similarity descending, ties by ascending id
    std::optional<EmotionClass> pseudo_label;  // label of neighbors[0] iff its similarity > eta
    std::vector<EmotionClass> gated_labels;    // every neighbor label whose similarity > eta, rank order
    double threshold_used = kDefaultEta;
    std::size_t k = kDefaultK;

    /// Gated labels joined with ", " (a single name when k = 1); empty when none pass.
    std::string pseudo_label_text() const;

    friend bool operator==(const RetrievalOutcome&, const RetrievalOutcome&) = default;
};

struct RetrieveParams {
    std::size_t k = kDefaultK;
    double eta = kDefaultEta;
};

/// Top-k same-language neighbors with threshold gating.
/// Errors: MissingLanguageIndex, EmptyAfterExclusion, InvalidArgument (k = 0), DimensionMismatch, ZeroVector.
RetrievalOutcome retrieve(std::string query_id, std::span<const float> query_joint, const LanguageTag& language,
                          const RetrievalIndex& index, RetrieveParams params = {},
                          std::optional<std::string_view> exclude_id = std::nullopt);

RetrievalOutcome retrieve(const JointEmbedding& query, const LanguageTag& language, const RetrievalIndex& index,
                          RetrieveParams params = {}, std::optional<std::string_view> exclude_id = std::nullopt);

struct RetrievalQuery {
    const AnnotationRecord* record;
    const JointEmbedding* embedding;
};

/// Runs `retrieve` for every query, in input order, spread over `threads` workers
/// (0 picks the hardware concurrency). With `exclude_self` each query excludes its own id.
std::vector<RetrievalOutcome> retrieve_batch(std::span<const RetrievalQuery> queries, const RetrievalIndex& index,
                                             RetrieveParams params, bool exclude_self, unsigned threads = 0);

std::string outcome_to_json_line(const RetrievalOutcome& outcome);
RetrievalOutcome outcome_from_json_line(std::string_view line);

void write_outcomes_jsonl(std::span<const RetrievalOutcome> outcomes, const std::filesystem::path& path);
std::vector<RetrievalOutcome> load_outcomes_jsonl(const std::filesystem::path& path);

}  // namespace ecsp
