// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "io_util.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>


namespace ecsp::detail {

std::string read_file(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

std::string dump_line(const nlohmann::json& obj) {
    return obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

std::string format_float(float v) {
    if (v == 0.0F && std::signbit(v)) return "-0.0";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_double(double v) {
    if (v == 0.0 && std::signbit(v)) return "-0.0";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace ecsp::detail
