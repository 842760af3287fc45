// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecsp/error.hpp"
#include "ecsp/tta.hpp"
#include "support/test_support.hpp"

using namespace ecsp;
namespace et = ecsp::testing;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

Image random_image(et::Rng& rng, std::uint32_t w, std::uint32_t h, std::uint32_t c) {
    Image img(w, h, c);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
    return img;
}

ProbabilityVector pv(const std::string& variant, const Probs& p, const std::string& sample = "s") {
    return {sample, "b", variant, p};
}

// Reference FNV-1a 64 written out byte by byte.
std::uint64_t fnv(const std::string& id, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&](unsigned char b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (unsigned char c : id) mix(c);
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
    return h;
}

}  // namespace

TEST_CASE("plan layout") {
    const auto plan = make_plan("s1", {1000, 1000});
    REQUIRE(plan.variants.size() == 4);
    CHECK(plan.variants[0].id() == "identity");
    CHECK(plan.variants[1].id() == "hflip");
    CHECK(plan.variants[2].id() == "vflip");
    CHECK(plan.variants[3].id() == "crop");
    CHECK(plan.target == ImageSize{768, 768});
    REQUIRE(plan.variants[3].crop);
    const auto c = *plan.variants[3].crop;
    CHECK(c.width == 875);
    CHECK(c.height == 875);
    CHECK(c.x0 <= 125);
    CHECK(c.y0 <= 125);
    const auto h = fnv("s1", 0);
    CHECK(c.x0 == static_cast<std::uint32_t>(h & 0xffffffffu) % 126);
    CHECK(c.y0 == static_cast<std::uint32_t>(h >> 32) % 126);
    CHECK(plan_hash("s1", 0) == h);
    CHECK(plan_hash("sample-Ω", 77) == fnv("sample-Ω", 77));
}

TEST_CASE("full-frame crop") {
    const auto plan = make_plan("s1", {640, 480}, kDefaultTargetSize, 1.0, 3);
    CHECK(*plan.variants[3].crop == CropRect{0, 0, 640, 480});
}

TEST_CASE("plan determinism and validation") {
    CHECK(make_plan("x", {300, 200}, {64, 64}, 0.5, 9) == make_plan("x", {300, 200}, {64, 64}, 0.5, 9));
    CHECK(code_of([] { make_plan("x", {0, 10}); }) == ErrorCode::InvalidSize);
    CHECK(code_of([] { make_plan("x", {10, 10}, {0, 5}); }) == ErrorCode::InvalidSize);
    CHECK(code_of([] { make_plan("x", {10, 10}, kDefaultTargetSize, 0.0); }) == ErrorCode::InvalidSize);
    CHECK(code_of([] { make_plan("x", {10, 10}, kDefaultTargetSize, 1.5); }) == ErrorCode::InvalidSize);
    // Tiny fractions still give at least one pixel.
    CHECK(make_plan("x", {3, 3}, {4, 4}, 0.01).variants[3].crop->width == 1);
}

TEST_CASE("crops stay inside the source for random sizes") {
    et::Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const ImageSize src{1 + static_cast<std::uint32_t>(rng() % 3000), 1 + static_cast<std::uint32_t>(rng() % 3000)};
        const double f = 0.05 + 0.95 * static_cast<double>(rng() % 1000) / 999.0;
        const auto c = *make_plan("id" + std::to_string(i), src, kDefaultTargetSize, f, rng()).variants[3].crop;
        CHECK(c.width >= 1);
        CHECK(c.x0 + c.width <= src.width);
        CHECK(c.y0 + c.height <= src.height);
    }
}

TEST_CASE("mirrors") {
    Image img(2, 2, 1);
    img.pixels = {1, 2, 3, 4};
    CHECK(hflip(img).pixels == std::vector<std::uint8_t>{2, 1, 4, 3});
    CHECK(vflip(img).pixels == std::vector<std::uint8_t>{3, 4, 1, 2});

    et::Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_image(rng, 1 + rng() % 40, 1 + rng() % 40, 1 + rng() % 4);
        CHECK(hflip(hflip(a)) == a);
        CHECK(vflip(vflip(a)) == a);
    }
}

TEST_CASE("crop extracts the rectangle") {
    Image img(3, 2, 2);
    std::iota(img.pixels.begin(), img.pixels.end(), 0);
    const auto c = crop(img, {1, 1, 2, 1});
    CHECK(c.width == 2);
    CHECK(c.height == 1);
    CHECK(c.pixels == std::vector<std::uint8_t>{8, 9, 10, 11});
    CHECK(code_of([&] { crop(img, {2, 0, 2, 1}); }) == ErrorCode::CropOutOfBounds);
}

TEST_CASE("resize") {
    et::Rng rng(3);
    const auto a = random_image(rng, 768, 768, 3);
    const TtaVariant identity{};
    CHECK(apply_variant(a, identity, {768, 768}) == a);

    Image flat(7, 5, 3);
    std::fill(flat.pixels.begin(), flat.pixels.end(), 200);
    const auto r = resize_bilinear(flat, {16, 9});
    CHECK(r.width == 16);
    CHECK(r.height == 9);
    CHECK(std::all_of(r.pixels.begin(), r.pixels.end(), [](auto p) { return p == 200; }));

    // 2x upsample of a horizontal ramp: interior samples are averages of neighbors.
    Image ramp(2, 1, 1);
    ramp.pixels = {0, 100};
    const auto up = resize_bilinear(ramp, {4, 1});
    CHECK(up.pixels == std::vector<std::uint8_t>{0, 25, 75, 100});
}

TEST_CASE("apply_variant") {
    et::Rng rng(4);
    const auto img = random_image(rng, 20, 10, 3);
    const auto plan = make_plan("s", {20, 10}, {20, 10}, 0.5, 1);
    CHECK(apply_variant(img, plan.variants[1], {20, 10}) == hflip(img));
    CHECK(apply_variant(img, plan.variants[2], {20, 10}) == vflip(img));
    const auto c = apply_variant(img, plan.variants[3], {20, 10});
    CHECK(c.width == 20);
    CHECK(code_of([&] { apply_variant(img, plan.variants[0], {20, 10}); }) == ErrorCode::Ok);
    TtaVariant outside;
    outside.kind = TtaKind::Crop;
    outside.crop = CropRect{10, 0, 15, 5};
    CHECK(code_of([&] { apply_variant(img, outside, {20, 10}); }) == ErrorCode::CropOutOfBounds);
    Image broken(4, 4, 3);
    broken.pixels.pop_back();
    CHECK(code_of([&] { apply_variant(broken, plan.variants[0], {4, 4}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("aggregate examples") {
    Probs e0{}, e1{};
    e0[0] = 1;
    e1[1] = 1;
    const auto two = aggregate_tta(std::vector{pv("identity", e0), pv("hflip", e1)});
    CHECK(two.probs[0] == doctest::Approx(0.5));
    CHECK(two.probs[1] == doctest::Approx(0.5));
    CHECK(two.variant_id == kTtaMeanVariant);

    et::Rng rng(6);
    const auto v = et::random_simplex(rng);
    const auto four = aggregate_tta(std::vector{pv("identity", v), pv("hflip", v), pv("vflip", v), pv("crop", v)});
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(four.probs[i] - v[i]) < 1e-15);

    CHECK(code_of([] { aggregate_tta(std::vector<ProbabilityVector>{}); }) == ErrorCode::EmptyInput);
    CHECK(code_of([&] { aggregate_tta(std::vector{pv("identity", v), pv("hflip", v, "t")}); }) == ErrorCode::MixedSample);
    CHECK(code_of([&] { aggregate_tta(std::vector{pv("identity", v), pv("identity", v)}); }) == ErrorCode::DuplicateVariant);
    Probs off{};
    off[0] = 0.5;
    CHECK(code_of([&] { aggregate_tta(std::vector{pv("identity", off)}); }) == ErrorCode::NotOnSimplex);
}

TEST_CASE("aggregate preserves the simplex and ignores order") {
    et::Rng rng(7);
    const std::vector<std::string> ids{"identity", "hflip", "vflip", "crop"};
    for (int t = 0; t < 1000; ++t) {
        std::vector<ProbabilityVector> vs;
        for (const auto& id : ids) vs.push_back(pv(id, et::random_simplex(rng)));
        const auto a = aggregate_tta(vs);
        double sum = 0;
        for (double p : a.probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        std::shuffle(vs.begin(), vs.end(), rng);
        CHECK(aggregate_tta(vs).probs == a.probs);
    }
}

TEST_CASE("plan JSONL is stable") {
    et::TempDir dir;
    std::vector<TtaPlan> plans{make_plan("a", {1000, 700}, {768, 768}, 0.875, 5), make_plan("b\"c", {10, 10}, {4, 4}, 1.0, 0)};
    write_plans_jsonl(plans, dir / "p.jsonl");
    const auto back = load_plans_jsonl(dir / "p.jsonl");
    CHECK(back == plans);
    write_plans_jsonl(back, dir / "q.jsonl");
    CHECK(et::slurp(dir / "p.jsonl") == et::slurp(dir / "q.jsonl"));
    CHECK(plan_to_json_line(plan_from_json_line(plan_to_json_line(plans[0]))) == plan_to_json_line(plans[0]));
}
