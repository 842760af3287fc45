// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"
#include "ecsp/retrieval.hpp"

namespace ecsp {

enum class PromptVariant { Sp, Pl, Ecsp, Raw };

std::string_view variant_name(PromptVariant v) noexcept;
/// Accepts "sp", "pl", "ecsp", "raw". Errors: InvalidArgument.
PromptVariant variant_from_name(std::string_view name);

struct PromptArtifact {
    std::string sample_id;
    PromptVariant variant = PromptVariant::Sp;
    std::string text;
    std::optional<EmotionClass> pseudo_label_used;
    std::string pseudo_label_text;  // what was spliced into the text; empty when nothing was
    bool truncated = false;

    friend bool operator==(const PromptArtifact&, const PromptArtifact&) = default;
};

struct PromptOptions {
    // Repeat the utterance between the simple prompt and the pseudo-label sentence.
    bool duplicate_utterance = false;
};

PromptArtifact render_simple(const AnnotationRecord& record);
PromptArtifact render_ecsp(const AnnotationRecord& record, const RetrievalOutcome& outcome, PromptOptions options = {});
PromptArtifact render_pseudo_only(const AnnotationRecord& record, const RetrievalOutcome& outcome);
PromptArtifact render_raw(const AnnotationRecord& record);

/// Dispatches on `variant`; `outcome` is required for pl and ecsp.
PromptArtifact render(PromptVariant variant, const AnnotationRecord& record, const RetrievalOutcome* outcome,
                      PromptOptions options = {});

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Keeps at most `max_tokens` whitespace-delimited tokens, dropping from the end.
/// Untruncated input is returned byte-for-byte. `max_tokens` of 0 is treated as 1.
Truncation truncate_tokens(std::string_view text, std::size_t max_tokens);

/// Applies truncate_tokens to the artifact text and records the flag.
void truncate_artifact(PromptArtifact& artifact, std::size_t max_tokens);

std::string prompt_to_json_line(const PromptArtifact& artifact);
PromptArtifact prompt_from_json_line(std::string_view line);
void write_prompts_jsonl(std::span<const PromptArtifact> prompts, const std::filesystem::path& path);
std::vector<PromptArtifact> load_prompts_jsonl(const std::filesystem::path& path);

}  // namespace ecsp
