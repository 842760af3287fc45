// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsp/core_model.hpp"

namespace ecsp {

struct LabelPair {
    EmotionClass gold;
    EmotionClass predicted;
};

/// Rows are gold classes, columns are predicted classes.
class ConfusionMatrix {
public:
    void add(EmotionClass gold, EmotionClass predicted) noexcept;

    std::uint64_t count(std::size_t gold, std::size_t predicted) const noexcept { return m_counts[gold][predicted]; }
    std::uint64_t total() const noexcept { return m_total; }
    std::uint64_t support(std::size_t cls) const noexcept;          // row sum
    std::uint64_t predicted_count(std::size_t cls) const noexcept;  // column sum
    std::uint64_t trace() const noexcept;

private:
    std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions> m_counts{};
    std::uint64_t m_total = 0;
};

struct Scores {
    double f1_macro = 0.0;
    double f1_micro = 0.0;
    double f1_weighted = 0.0;
    double accuracy = 0.0;
    std::uint64_t n = 0;
    std::array<double, kNumEmotions> f1_per_class{};
};

/// Per-class F1 is 0 whenever precision + recall is 0 (including classes with
/// no support and no predictions); macro still averages over all nine classes.
/// Errors: EmptyInput.
Scores score(const ConfusionMatrix& matrix);
Scores score(std::span<const LabelPair> pairs);

enum class Average { Macro, Micro, Weighted };

std::string_view average_name(Average a) noexcept;
Average average_from_name(std::string_view name);
double f1_for(const Scores& s, Average a) noexcept;

/// Decimal round-half-even of the shortest round-trip form of `value`.
std::string format_fixed_half_even(double value, int decimals);

struct ReportRow {
    std::string method;
    Scores scores;
};

/// Fixed-width Method / F1 / Acc table at 3 decimals; the F1 header names the averaging.
std::string report(std::span<const ReportRow> rows, Average average = Average::Macro);

/// {"method", "f1_macro", "f1_micro", "f1_weighted", "accuracy", "n"}
std::string scores_to_json(std::string_view method, const Scores& s);

}  // namespace ecsp
