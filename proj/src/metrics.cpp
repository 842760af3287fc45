// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/metrics.hpp"

#include <algorithm>
#include <charconv>

#include "io_util.hpp"

namespace ecsp {

void ConfusionMatrix::add(EmotionClass gold, EmotionClass predicted) noexcept {
    ++m_counts[gold.index()][predicted.index()];
    ++m_total;
}

std::uint64_t ConfusionMatrix::support(std::size_t cls) const noexcept {
    std::uint64_t s = 0;
    for (auto v : m_counts[cls]) s += v;
    return s;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t cls) const noexcept {
    std::uint64_t s = 0;
    for (const auto& row : m_counts) s += row[cls];
    return s;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < kNumEmotions; ++c) s += m_counts[c][c];
    return s;
}

Scores score(const ConfusionMatrix& m) {
    if (m.total() == 0) fail(ErrorCode::EmptyInput, "score: no label pairs");
    Scores s;
    s.n = m.total();
    const double total = static_cast<double>(m.total());
    double macro = 0.0;
    double weighted = 0.0;
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        const double tp = static_cast<double>(m.count(c, c));
        const auto predicted = m.predicted_count(c);
        const auto support = m.support(c);
        const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        const double recall = support ? tp / static_cast<double>(support) : 0.0;
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        s.f1_per_class[c] = f1;
        macro += f1;
        weighted += f1 * static_cast<double>(support);
    }
    s.f1_macro = macro / static_cast<double>(kNumEmotions);
    s.f1_weighted = weighted / total;
    s.accuracy = static_cast<double>(m.trace()) / total;
    // Single-label multiclass: micro precision and micro recall both equal accuracy.
    s.f1_micro = s.accuracy;
    return s;
}

Scores score(std::span<const LabelPair> pairs) {
    ConfusionMatrix m;
    for (const auto& p : pairs) m.add(p.gold, p.predicted);
    return score(m);
}

std::string_view average_name(Average a) noexcept {
    switch (a) {
        case Average::Macro: return "macro";
        case Average::Micro: return "micro";
        case Average::Weighted: return "weighted";
    }
    return "macro";
}

Average average_from_name(std::string_view name) {
    if (name == "macro") return Average::Macro;
    if (name == "micro") return Average::Micro;
    if (name == "weighted") return Average::Weighted;
    fail(ErrorCode::InvalidArgument, "unknown averaging '" + std::string(name) + "'");
}

double f1_for(const Scores& s, Average a) noexcept {
    switch (a) {
        case Average::Macro: return s.f1_macro;
        case Average::Micro: return s.f1_micro;
        case Average::Weighted: return s.f1_weighted;
    }
    return s.f1_macro;
}

std::string format_fixed_half_even(double value, int decimals) {
    // Work on the shortest decimal form so that e.g. 0.6225 is treated as an exact tie.
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
    std::string text(buf.data(), res.ptr);
    bool negative = false;
    if (!text.empty() && text[0] == '-') {
        negative = true;
        text.erase(0, 1);
    }
    auto dot = text.find('.');
    std::string int_part = dot == std::string::npos ? text : text.substr(0, dot);
    std::string frac = dot == std::string::npos ? std::string{} : text.substr(dot + 1);
    const auto keep = static_cast<std::size_t>(std::max(decimals, 0));
    if (frac.size() < keep) frac.append(keep - frac.size(), '0');

    std::string digits = int_part + frac.substr(0, keep);
    const std::string rest = frac.substr(keep);
    bool round_up = false;
    if (!rest.empty()) {
        if (rest[0] > '5') {
            round_up = true;
        } else if (rest[0] == '5') {
            const bool beyond = rest.find_first_not_of('0', 1) != std::string::npos;
            round_up = beyond || ((digits.back() - '0') % 2 == 1);
        }
    }
    if (round_up) {
        std::size_t i = digits.size();
        while (i > 0) {
            --i;
            if (digits[i] == '9') {
                digits[i] = '0';
            } else {
                ++digits[i];
                break;
            }
            if (i == 0) digits.insert(digits.begin(), '1');
        }
    }
    std::string out = digits.substr(0, digits.size() - keep);
    if (keep > 0) out += "." + digits.substr(digits.size() - keep);
    const bool zero = out.find_first_not_of("0.") == std::string::npos;
    return (negative && !zero ? "-" : "") + out;
}

std::string report(std::span<const ReportRow> rows, Average average) {
    const std::string f1_header = "F1 (" + std::string(average_name(average)) + ")";
    std::size_t method_width = 6;
    for (const auto& r : rows) method_width = std::max(method_width, r.method.size());

    const auto pad_right = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    const auto pad_left = [](const std::string& s, std::size_t w) {
        return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
    };
    const std::size_t f1_width = std::max<std::size_t>(f1_header.size(), 5);
    const std::size_t acc_width = 5;

    std::string out = pad_right("Method", method_width) + "  " + pad_left(f1_header, f1_width) + "  " +
                      pad_left("Acc", acc_width) + "\n";
    for (const auto& r : rows) {
        out += pad_right(r.method, method_width) + "  " +
               pad_left(format_fixed_half_even(f1_for(r.scores, average), 3), f1_width) + "  " +
               pad_left(format_fixed_half_even(r.scores.accuracy, 3), acc_width) + "\n";
    }
    return out;
}

std::string scores_to_json(std::string_view method, const Scores& s) {
    nlohmann::json obj = nlohmann::json::object();
    obj["method"] = std::string(method);
    obj["f1_macro"] = s.f1_macro;
    obj["f1_micro"] = s.f1_micro;
    obj["f1_weighted"] = s.f1_weighted;
    obj["accuracy"] = s.accuracy;
    obj["n"] = s.n;
    return detail::dump_line(obj);
}

}  // namespace ecsp
