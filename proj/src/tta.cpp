// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/tta.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

void check_shape(const Image& image) {
    if (image.width == 0 || image.height == 0 || image.channels == 0 ||
        image.pixels.size() != std::size_t{image.width} * image.height * image.channels) {
        fail(ErrorCode::ShapeMismatch, "image buffer of " + std::to_string(image.pixels.size()) + " bytes does not match " +
                                           std::to_string(image.width) + "x" + std::to_string(image.height) + "x" +
                                           std::to_string(image.channels));
    }
}

}  // namespace

std::string_view tta_kind_name(TtaKind kind) noexcept {
    switch (kind) {
        case TtaKind::Identity: return "identity";
        case TtaKind::HFlip: return "hflip";
        case TtaKind::VFlip: return "vflip";
        case TtaKind::Crop: return "crop";
    }
    return "identity";
}

TtaKind tta_kind_from_name(std::string_view name) {
    if (name == "identity") return TtaKind::Identity;
    if (name == "hflip") return TtaKind::HFlip;
    if (name == "vflip") return TtaKind::VFlip;
    if (name == "crop") return TtaKind::Crop;
    fail(ErrorCode::InvalidArgument, "unknown TTA variant '" + std::string(name) + "'");
}

std::uint64_t plan_hash(std::string_view sample_id, std::uint64_t seed) noexcept {
    constexpr std::uint64_t kOffset = 14695981039346656037ULL;
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t h = kOffset;
    for (char c : sample_id) {
        h ^= static_cast<unsigned char>(c);
        h *= kPrime;
    }
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xFF;
        h *= kPrime;
    }
    return h;
}

TtaPlan make_plan(std::string_view sample_id, ImageSize source, ImageSize target, double crop_fraction,
                  std::uint64_t seed) {
    if (source.width == 0 || source.height == 0) fail(ErrorCode::InvalidSize, "source size must be at least 1x1");
    if (target.width == 0 || target.height == 0) fail(ErrorCode::InvalidSize, "target size must be at least 1x1");
    if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) {
        fail(ErrorCode::InvalidSize, "crop fraction must be in (0, 1]");
    }

    const auto scaled = [crop_fraction](std::uint32_t extent) {
        const auto v = static_cast<std::uint32_t>(std::floor(crop_fraction * extent));
        return std::clamp<std::uint32_t>(v, 1, extent);
    };
    CropRect rect;
    rect.width = scaled(source.width);
    rect.height = scaled(source.height);
    const std::uint64_t h = plan_hash(sample_id, seed);
    rect.x0 = static_cast<std::uint32_t>((h & 0xFFFFFFFFULL) % (std::uint64_t{source.width - rect.width} + 1));
    rect.y0 = static_cast<std::uint32_t>((h >> 32) % (std::uint64_t{source.height - rect.height} + 1));

    TtaPlan plan;
    plan.sample_id = std::string(sample_id);
    plan.source = source;
    plan.target = target;
    plan.seed = seed;
    plan.variants = {
        TtaVariant{TtaKind::Identity, std::nullopt, std::nullopt},
        TtaVariant{TtaKind::HFlip, std::nullopt, std::nullopt},
        TtaVariant{TtaKind::VFlip, std::nullopt, std::nullopt},
        TtaVariant{TtaKind::Crop, rect, seed},
    };
    return plan;
}

Image hflip(const Image& image) {
    check_shape(image);
    Image out(image.width, image.height, image.channels);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        for (std::uint32_t x = 0; x < image.width; ++x) {
            for (std::uint32_t c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(image.width - 1 - x, y, c);
        }
    }
    return out;
}

Image vflip(const Image& image) {
    check_shape(image);
    Image out(image.width, image.height, image.channels);
    const std::size_t row = std::size_t{image.width} * image.channels;
    for (std::uint32_t y = 0; y < image.height; ++y) {
        const auto src = image.pixels.begin() + static_cast<std::ptrdiff_t>((image.height - 1 - y) * row);
        std::copy(src, src + static_cast<std::ptrdiff_t>(row), out.pixels.begin() + static_cast<std::ptrdiff_t>(y * row));
    }
    return out;
}

Image crop(const Image& image, const CropRect& rect) {
    check_shape(image);
    if (rect.width == 0 || rect.height == 0 || std::uint64_t{rect.x0} + rect.width > image.width ||
        std::uint64_t{rect.y0} + rect.height > image.height) {
        fail(ErrorCode::CropOutOfBounds, "crop [" + std::to_string(rect.x0) + "," + std::to_string(rect.y0) + "," +
                                             std::to_string(rect.width) + "," + std::to_string(rect.height) +
                                             "] outside " + std::to_string(image.width) + "x" +
                                             std::to_string(image.height));
    }
    Image out(rect.width, rect.height, image.channels);
    for (std::uint32_t y = 0; y < rect.height; ++y) {
        for (std::uint32_t x = 0; x < rect.width; ++x) {
            for (std::uint32_t c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(rect.x0 + x, rect.y0 + y, c);
        }
    }
    return out;
}

Image resize_bilinear(const Image& image, ImageSize target) {
    check_shape(image);
    if (target.width == 0 || target.height == 0) fail(ErrorCode::InvalidSize, "resize target must be at least 1x1");
    if (target.width == image.width && target.height == image.height) return image;

    Image out(target.width, target.height, image.channels);
    const double sx = static_cast<double>(image.width) / target.width;
    const double sy = static_cast<double>(image.height) / target.height;
    const auto sample_axis = [](std::uint32_t dst, double scale, std::uint32_t extent, std::uint32_t& lo,
                                std::uint32_t& hi, double& frac) {
        double src = (dst + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(extent - 1));
        lo = static_cast<std::uint32_t>(std::floor(src));
        hi = std::min(lo + 1, extent - 1);
        frac = src - lo;
    };
    for (std::uint32_t y = 0; y < target.height; ++y) {
        std::uint32_t y0, y1;
        double fy;
        sample_axis(y, sy, image.height, y0, y1, fy);
        for (std::uint32_t x = 0; x < target.width; ++x) {
            std::uint32_t x0, x1;
            double fx;
            sample_axis(x, sx, image.width, x0, x1, fx);
            for (std::uint32_t c = 0; c < image.channels; ++c) {
                const double top = image.at(x0, y0, c) * (1.0 - fx) + image.at(x1, y0, c) * fx;
                const double bottom = image.at(x0, y1, c) * (1.0 - fx) + image.at(x1, y1, c) * fx;
                const double v = top * (1.0 - fy) + bottom * fy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Image apply_variant(const Image& image, const TtaVariant& variant, ImageSize target) {
    check_shape(image);
    switch (variant.kind) {
        case TtaKind::Identity: return resize_bilinear(image, target);
        case TtaKind::HFlip: return resize_bilinear(hflip(image), target);
        case TtaKind::VFlip: return resize_bilinear(vflip(image), target);
        case TtaKind::Crop:
            if (!variant.crop) fail(ErrorCode::InvalidArgument, "crop variant without crop rectangle");
            return resize_bilinear(crop(image, *variant.crop), target);
    }
    return resize_bilinear(image, target);
}

ProbabilityVector aggregate_tta(std::span<const ProbabilityVector> vectors) {
    if (vectors.empty()) fail(ErrorCode::EmptyInput, "aggregate_tta: no vectors");
    std::vector<const ProbabilityVector*> ordered;
    ordered.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (v.sample_id != vectors.front().sample_id || v.backend_id != vectors.front().backend_id) {
            fail(ErrorCode::MixedSample, "aggregate_tta: mixed (" + v.sample_id + ", " + v.backend_id + ") with (" +
                                             vectors.front().sample_id + ", " + vectors.front().backend_id + ")");
        }
        if (!on_simplex(v.probs)) {
            fail(ErrorCode::NotOnSimplex, "aggregate_tta: vector for " + v.sample_id + "/" + v.variant_id +
                                              " is not a probability vector");
        }
        ordered.push_back(&v);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->variant_id < b->variant_id; });
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->variant_id == ordered[i - 1]->variant_id) {
            fail(ErrorCode::DuplicateVariant, "aggregate_tta: duplicate variant '" + ordered[i]->variant_id + "' for " +
                                                  ordered[i]->sample_id);
        }
    }

    ProbabilityVector out;
    out.sample_id = vectors.front().sample_id;
    out.backend_id = vectors.front().backend_id;
    out.variant_id = std::string(kTtaMeanVariant);
    out.probs.fill(0.0);
    for (const auto* v : ordered) {
        for (std::size_t c = 0; c < kNumEmotions; ++c) out.probs[c] += v->probs[c];
    }
    const double n = static_cast<double>(ordered.size());
    double total = 0.0;
    for (auto& p : out.probs) {
        p /= n;
        total += p;
    }
    for (auto& p : out.probs) p = std::min(p / total, 1.0);
    return out;
}

std::string plan_to_json_line(const TtaPlan& plan) {
    json variants = json::array();
    for (const auto& v : plan.variants) {
        json jv = {{"variant_id", std::string(v.id())}};
        if (v.crop) jv["crop"] = {v.crop->x0, v.crop->y0, v.crop->width, v.crop->height};
        variants.push_back(std::move(jv));
    }
    json obj = json::object();
    obj["sample_id"] = plan.sample_id;
    obj["source"] = {plan.source.width, plan.source.height};
    obj["variants"] = std::move(variants);
    obj["target"] = {plan.target.width, plan.target.height};
    obj["seed"] = plan.seed;
    return detail::dump_line(obj);
}

namespace {

TtaPlan plan_from_json(const json& obj) {
    TtaPlan plan;
    plan.sample_id = obj.at("sample_id").get<std::string>();
    plan.seed = obj.at("seed").get<std::uint64_t>();
    const auto& target = obj.at("target");
    plan.target = {target.at(0).get<std::uint32_t>(), target.at(1).get<std::uint32_t>()};
    if (auto it = obj.find("source"); it != obj.end()) {
        plan.source = {it->at(0).get<std::uint32_t>(), it->at(1).get<std::uint32_t>()};
    }
    for (const auto& jv : obj.at("variants")) {
        TtaVariant v;
        v.kind = tta_kind_from_name(jv.at("variant_id").get<std::string>());
        if (auto it = jv.find("crop"); it != jv.end()) {
            v.crop = CropRect{it->at(0).get<std::uint32_t>(), it->at(1).get<std::uint32_t>(),
                              it->at(2).get<std::uint32_t>(), it->at(3).get<std::uint32_t>()};
            v.seed = plan.seed;
        }
        if ((v.kind == TtaKind::Crop) != v.crop.has_value()) {
            fail(ErrorCode::Parse, "tta plan: crop rectangle must be present exactly for the crop variant");
        }
        plan.variants.push_back(v);
    }
    return plan;
}

}  // namespace

TtaPlan plan_from_json_line(std::string_view line) {
    try {
        return plan_from_json(json::parse(line));
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("tta plan: ") + e.what());
    }
}

void write_plans_jsonl(std::span<const TtaPlan> plans, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& p : plans) out << plan_to_json_line(p) << '\n';
    detail::close_out(out, path);
}

std::vector<TtaPlan> load_plans_jsonl(const std::filesystem::path& path) {
    std::vector<TtaPlan> out;
    detail::for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(plan_from_json(obj)); });
    return out;
}

}  // namespace ecsp
