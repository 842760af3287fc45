// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/core_model.hpp"

#include <cmath>

#include "ecsp/error.hpp"
#include "text_util.hpp"

namespace ecsp {

EmotionClass EmotionClass::from_index(std::size_t index) {
    if (index >= kNumEmotions) {
        fail(ErrorCode::InvalidArgument, "emotion index out of range: " + std::to_string(index));
    }
    return EmotionClass(static_cast<std::uint8_t>(index));
}

EmotionClass emotion_from_name(std::string_view name) {
    const std::string key = detail::to_lower(detail::trim(name));
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        if (key == kEmotionNames[i]) return EmotionClass::from_index(i);
    }
    fail(ErrorCode::UnknownEmotion, "unknown emotion '" + std::string(name) + "'");
}

std::string_view class_name(std::size_t index) {
    return EmotionClass::from_index(index).name();
}

LanguageTag LanguageTag::parse(std::string_view raw) {
    std::string v = detail::to_lower(detail::trim(raw));
    if (v.empty()) fail(ErrorCode::Validation, "language: empty language tag");
    return LanguageTag(std::move(v));
}

std::string_view split_name(Split split) noexcept {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_name(std::string_view name) {
    const std::string key = detail::to_lower(detail::trim(name));
    if (key == "train") return Split::Train;
    if (key == "val" || key == "valid" || key == "validation") return Split::Val;
    if (key == "test") return Split::Test;
    fail(ErrorCode::Validation, "split: unknown split '" + std::string(name) + "'");
}

const AnnotationRecord& validate_record(const AnnotationRecord& record) {
    if (record.id.empty()) fail(ErrorCode::Validation, "id: empty id");
    if (detail::trim(record.art_style).empty()) {
        fail(ErrorCode::Validation, "art_style: empty art_style for record " + record.id);
    }
    if (record.language.empty()) {
        fail(ErrorCode::Validation, "language: empty language for record " + record.id);
    }
    if (detail::trim(record.utterance).empty()) {
        fail(ErrorCode::Validation, "utterance: empty utterance for record " + record.id);
    }
    if (record.split == Split::Train && !record.gold_emotion) {
        fail(ErrorCode::Validation, "gold_emotion: train record " + record.id + " has no emotion");
    }
    if ((record.image_width && *record.image_width == 0) || (record.image_height && *record.image_height == 0)) {
        fail(ErrorCode::Validation, "image_size: zero image dimension for record " + record.id);
    }
    return record;
}

JointEmbedding::JointEmbedding(std::string id, std::span<const float> image_part, std::span<const float> text_part)
    : m_id(std::move(id)), m_image_dim(image_part.size()) {
    m_joint.reserve(image_part.size() + text_part.size());
    m_joint.insert(m_joint.end(), image_part.begin(), image_part.end());
    m_joint.insert(m_joint.end(), text_part.begin(), text_part.end());
}

bool on_simplex(const Probs& probs, double tolerance) noexcept {
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
        sum += p;
    }
    return std::fabs(sum - 1.0) <= tolerance;
}

EmotionClass argmax(const Probs& probs) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return EmotionClass::from_index(best);
}

}  // namespace ecsp
