// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecsp/core_model.hpp"

namespace ecsp {

enum class AnnotationFormat { Jsonl, Csv };

/// Picks Csv for a ".csv" extension, Jsonl otherwise.
AnnotationFormat annotation_format_for(const std::filesystem::path& path);

/// Loads one validated record per non-blank line (JSONL) or data row (CSV).
/// CSV columns are matched by header name. Order is preserved.
/// Errors: Parse (with line number), DuplicateId, Validation, Io.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, AnnotationFormat format);

void write_annotations_jsonl(std::span<const AnnotationRecord> records, const std::filesystem::path& path);
std::string annotation_to_json_line(const AnnotationRecord& record);

// Packed embedding layout (little endian, no padding):
//   "ECSP" | u16 version=1 | u32 d_v | u32 d_t | u32 count
//   count x ( u16 id_len | id bytes | (d_v + d_t) x f32, image part first )
inline constexpr char kEmbeddingMagic[4] = {'E', 'C', 'S', 'P'};
inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 2 + 4 + 4 + 4;

/// Loads either the packed binary format (detected by magic) or embedding JSONL.
/// Dimensions are checked against the first entry.
/// Errors: DimensionMismatch(id), CorruptFile(offset), ZeroVector(id), Parse, Io.
std::vector<JointEmbedding> load_embeddings(const std::filesystem::path& path);

/// Returns the number of bytes written. Errors: InvalidArgument on an empty or
/// inconsistent list, Io on write failure.
std::uint64_t write_embeddings_binary(std::span<const JointEmbedding> embeddings, const std::filesystem::path& path);

/// Floats are printed in shortest round-trip form, so text -> binary -> text is bit-exact.
void write_embeddings_jsonl(std::span<const JointEmbedding> embeddings, const std::filesystem::path& path);

/// Size in bytes of the packed file for the given ids and dimensions.
std::uint64_t packed_embedding_size(std::span<const std::string> ids, std::size_t image_dim, std::size_t text_dim);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

struct DatasetManifest {
    std::vector<AnnotationRecord> records;
    std::size_t embedding_dim_image = 0;
    std::size_t embedding_dim_text = 0;
    std::map<std::string, SplitCounts> counts;  // keyed by language
};

/// Cross-checks embeddings against records: every embedding id must name a record.
/// Errors: Validation(unknown id), DimensionMismatch.
DatasetManifest make_manifest(std::vector<AnnotationRecord> records, std::span<const JointEmbedding> embeddings);

}  // namespace ecsp
