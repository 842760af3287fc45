// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"

namespace ecsp {

struct ImageSize {
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

inline constexpr ImageSize kDefaultTargetSize{768, 768};
inline constexpr double kDefaultCropFraction = 0.875;

enum class TtaKind { Identity, HFlip, VFlip, Crop };

std::string_view tta_kind_name(TtaKind kind) noexcept;
TtaKind tta_kind_from_name(std::string_view name);

struct CropRect {
    std::uint32_t x0 = 0;
    std::uint32_t y0 = 0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct TtaVariant {
    TtaKind kind = TtaKind::Identity;
    std::optional<CropRect> crop;  // present iff kind == Crop
    std::optional<std::uint64_t> seed;

    std::string_view id() const noexcept { return tta_kind_name(kind); }

    friend bool operator==(const TtaVariant&, const TtaVariant&) = default;
};

struct TtaPlan {
    std::string sample_id;
    ImageSize source;
    std::vector<TtaVariant> variants;  // identity, hflip, vflip, crop
    ImageSize target = kDefaultTargetSize;
    std::uint64_t seed = 0;

    friend bool operator==(const TtaPlan&, const TtaPlan&) = default;
};

/// 64-bit FNV-1a over the UTF-8 bytes of `sample_id` followed by the 8
/// little-endian bytes of `seed`.
std::uint64_t plan_hash(std::string_view sample_id, std::uint64_t seed) noexcept;

/// Crop size is (floor(f*W), floor(f*H)), at least 1x1. The offset takes the low
/// 32 bits of plan_hash modulo (W - w + 1) for x and the high 32 bits modulo
/// (H - h + 1) for y. Errors: InvalidSize.
TtaPlan make_plan(std::string_view sample_id, ImageSize source, ImageSize target = kDefaultTargetSize,
                  double crop_fraction = kDefaultCropFraction, std::uint64_t seed = 0);

/// Interleaved 8-bit image, row-major, `channels` values per pixel.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h, std::uint32_t c)
        : width(w), height(h), channels(c), pixels(std::size_t{w} * h * c) {}

    std::uint8_t& at(std::uint32_t x, std::uint32_t y, std::uint32_t c) {
        return pixels[(std::size_t{y} * width + x) * channels + c];
    }
    std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t c) const {
        return pixels[(std::size_t{y} * width + x) * channels + c];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

Image hflip(const Image& image);
Image vflip(const Image& image);
/// Errors: CropOutOfBounds.
Image crop(const Image& image, const CropRect& rect);
/// Half-pixel-centre bilinear resampling; same-size input is returned unchanged.
Image resize_bilinear(const Image& image, ImageSize target);

/// Transform followed by resize. Errors: ShapeMismatch, CropOutOfBounds, InvalidSize.
Image apply_variant(const Image& image, const TtaVariant& variant, ImageSize target);

inline constexpr std::string_view kTtaMeanVariant = "tta-mean";

/// Per-class mean of the inputs, renormalized to sum 1. Inputs are summed in
/// variant_id order so the result does not depend on input order.
/// Errors: EmptyInput, MixedSample, DuplicateVariant, NotOnSimplex.
ProbabilityVector aggregate_tta(std::span<const ProbabilityVector> vectors);

std::string plan_to_json_line(const TtaPlan& plan);
TtaPlan plan_from_json_line(std::string_view line);
void write_plans_jsonl(std::span<const TtaPlan> plans, const std::filesystem::path& path);
std::vector<TtaPlan> load_plans_jsonl(const std::filesystem::path& path);

}  // namespace ecsp
