// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "ecsp/error.hpp"
#include "ecsp/metrics.hpp"
#include "support/test_support.hpp"

using namespace ecsp;
namespace et = ecsp::testing;

namespace {

std::vector<LabelPair> pairs_of(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred) {
    std::vector<LabelPair> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        out.push_back({EmotionClass::from_index(gold[i]), EmotionClass::from_index(pred[i])});
    }
    return out;
}

Scores with(double f1, double acc) {
    Scores s;
    s.f1_macro = f1;
    s.accuracy = acc;
    s.n = 1;
    return s;
}

}  // namespace

TEST_CASE("all correct") {
    const auto s = score(pairs_of({0, 1, 2, 3, 4, 5, 6, 7, 8}, {0, 1, 2, 3, 4, 5, 6, 7, 8}));
    CHECK(s.f1_macro == 1.0);
    CHECK(s.f1_micro == 1.0);
    CHECK(s.f1_weighted == 1.0);
    CHECK(s.accuracy == 1.0);
}

TEST_CASE("binary-collapsed hand example") {
    const auto s = score(pairs_of({0, 0, 1, 1}, {0, 1, 1, 1}));
    CHECK(s.f1_per_class[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.f1_per_class[1] == doctest::Approx(0.8));
    CHECK(s.accuracy == 0.75);
    // Seven classes with no support and no predictions contribute 0.
    CHECK(s.f1_macro == doctest::Approx((2.0 / 3.0 + 0.8) / 9.0));
    CHECK(s.f1_weighted == doctest::Approx(0.5 * 2.0 / 3.0 + 0.5 * 0.8));
    CHECK(s.f1_micro == s.accuracy);
}

TEST_CASE("empty input") {
    CHECK_THROWS_AS(score(std::vector<LabelPair>{}), Error);
}

TEST_CASE("confusion matrix bookkeeping") {
    ConfusionMatrix m;
    m.add(EmotionClass::from_index(0), EmotionClass::from_index(1));
    m.add(EmotionClass::from_index(0), EmotionClass::from_index(0));
    m.add(EmotionClass::from_index(2), EmotionClass::from_index(1));
    CHECK(m.total() == 3);
    CHECK(m.support(0) == 2);
    CHECK(m.predicted_count(1) == 2);
    CHECK(m.trace() == 1);
    CHECK(m.count(2, 1) == 1);
}

TEST_CASE("brute-force oracle on random label sets") {
    et::Rng rng(2024);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<std::size_t> gold(n), pred(n);
        const std::size_t span = 1 + rng() % 9;
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = rng() % span;
            pred[i] = rng() % 4 == 0 ? gold[i] : rng() % 9;
        }
        const auto s = score(pairs_of(gold, pred));
        const auto o = et::oracle_scores(gold, pred);
        CHECK(std::abs(s.f1_macro - o.macro) < 1e-12);
        CHECK(std::abs(s.f1_micro - o.micro) < 1e-12);
        CHECK(std::abs(s.f1_weighted - o.weighted) < 1e-12);
        CHECK(std::abs(s.accuracy - o.accuracy) < 1e-12);
        CHECK(s.f1_micro == s.accuracy);
    }
}

TEST_CASE("half-even formatting") {
    CHECK(format_fixed_half_even(0.6225, 3) == "0.622");
    CHECK(format_fixed_half_even(0.6235, 3) == "0.624");
    CHECK(format_fixed_half_even(0.6226, 3) == "0.623");
    CHECK(format_fixed_half_even(1.0, 3) == "1.000");
    CHECK(format_fixed_half_even(0.0, 3) == "0.000");
    CHECK(format_fixed_half_even(0.9995, 3) == "1.000");
    CHECK(format_fixed_half_even(0.0005, 3) == "0.000");
    CHECK(format_fixed_half_even(0.0015, 3) == "0.002");
    CHECK(format_fixed_half_even(0.741, 3) == "0.741");
}

TEST_CASE("report table") {
    const std::vector<ReportRow> one{{"X2-VLM+ecsp", with(0.622, 0.735)}};
    const auto t = report(one);
    CHECK(t.find("0.622  0.735") != std::string::npos);
    CHECK(t.find("X2-VLM+ecsp") != std::string::npos);
    CHECK(t.find("F1 (macro)") != std::string::npos);

    const auto empty = report(std::vector<ReportRow>{});
    CHECK(et::lines_of(empty).size() == 1);
    CHECK(empty.find("Method") == 0);

    const std::vector<ReportRow> rounding{{"m", with(0.6225, 0.7405)}};
    CHECK(report(rounding).find("0.622  0.740") != std::string::npos);
    CHECK(report(one, Average::Weighted).find("F1 (weighted)") != std::string::npos);
}

TEST_CASE("scores JSON") {
    const auto s = score(pairs_of({0, 0, 1, 1}, {0, 1, 1, 1}));
    const auto j = scores_to_json("m", s);
    CHECK(j.find("\"method\":\"m\"") != std::string::npos);
    CHECK(j.find("\"accuracy\":0.75") != std::string::npos);
    CHECK(j.find("\"n\":4") != std::string::npos);
}
