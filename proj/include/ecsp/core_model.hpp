// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecsp {

inline constexpr std::size_t kNumEmotions = 9;

/// Canonical class order. Every vector, file and report uses this order.
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "amusement", "awe", "contentment", "excitement", "anger",
    "disgust", "fear", "sadness", "something else",
};

class EmotionClass {
public:
    constexpr EmotionClass() = default;

    /// Throws InvalidArgument when index >= kNumEmotions.
    static EmotionClass from_index(std::size_t index);

    constexpr std::size_t index() const noexcept { return m_index; }
    constexpr std::string_view name() const noexcept { return kEmotionNames[m_index]; }

    friend constexpr bool operator==(EmotionClass, EmotionClass) = default;
    friend constexpr auto operator<=>(EmotionClass, EmotionClass) = default;

private:
    constexpr explicit EmotionClass(std::uint8_t index) : m_index(index) {}
    std::uint8_t m_index = 0;
};

/// Lowercases and trims `name`; "something else" must use one inner space.
/// Throws UnknownEmotion for anything outside the vocabulary.
EmotionClass emotion_from_name(std::string_view name);

std::string_view class_name(std::size_t index);

class LanguageTag {
public:
    LanguageTag() = default;

    /// Trims surrounding whitespace and lowercases ASCII letters.
    /// Throws Validation on an empty result.
    static LanguageTag parse(std::string_view raw);

    const std::string& value() const noexcept { return m_value; }
    bool empty() const noexcept { return m_value.empty(); }

    friend bool operator==(const LanguageTag&, const LanguageTag&) = default;
    friend auto operator<=>(const LanguageTag&, const LanguageTag&) = default;

private:
    explicit LanguageTag(std::string v) : m_value(std::move(v)) {}
    std::string m_value;
};

enum class Split { Train, Val, Test };

std::string_view split_name(Split split) noexcept;
Split split_from_name(std::string_view name);

struct AnnotationRecord {
    std::string id;
    std::string art_style;
    LanguageTag language;
    std::string utterance;
    std::optional<EmotionClass> gold_emotion;
    std::string image_ref;
    Split split = Split::Train;
    // Source image size in pixels, when the annotation file provides it.
    std::optional<std::uint32_t> image_width;
    std::optional<std::uint32_t> image_height;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Returns the record unchanged, or throws Validation naming the first bad field.
const AnnotationRecord& validate_record(const AnnotationRecord& record);

/// Image embedding followed by text embedding, stored as one contiguous vector.
class JointEmbedding {
public:
    JointEmbedding() = default;
    JointEmbedding(std::string id, std::span<const float> image_part, std::span<const float> text_part);

    const std::string& id() const noexcept { return m_id; }
    std::size_t image_dim() const noexcept { return m_image_dim; }
    std::size_t text_dim() const noexcept { return m_joint.size() - m_image_dim; }

    std::span<const float> image_part() const noexcept { return {m_joint.data(), m_image_dim}; }
    std::span<const float> text_part() const noexcept {
        return std::span<const float>(m_joint).subspan(m_image_dim);
    }
    std::span<const float> joint() const noexcept { return m_joint; }

    friend bool operator==(const JointEmbedding&, const JointEmbedding&) = default;

private:
    std::string m_id;
    std::vector<float> m_joint;
    std::size_t m_image_dim = 0;
};

using Probs = std::array<double, kNumEmotions>;

struct ProbabilityVector {
    std::string sample_id;
    std::string backend_id;
    std::string variant_id;
    Probs probs{};

    friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;
};

inline constexpr double kSimplexTolerance = 1e-6;

/// True when every entry is in [0,1] and the sum is within `tolerance` of 1.
bool on_simplex(const Probs& probs, double tolerance = kSimplexTolerance) noexcept;

/// Lowest index wins ties.
EmotionClass argmax(const Probs& probs) noexcept;

}  // namespace ecsp
