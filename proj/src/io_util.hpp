// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecsp/error.hpp"

namespace ecsp::detail {

inline std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path);

/// JSON whose floating-point numbers are parsed straight to float, so a
/// shortest-form float string is rounded once and comes back bit-exact.
using float_json = nlohmann::basic_json<std::map, std::vector, std::string, bool, std::int64_t, std::uint64_t, float>;

/// Calls `fn(line_number, object)` for every non-blank line. Lines that are not
/// JSON objects raise Parse naming the 1-based line number.
template <class Json>
void for_each_jsonl_as(const std::filesystem::path& path, const std::function<void(std::size_t, const Json&)>& fn) {
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    const auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        Json obj;
        try {
            obj = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::Parse, where() + e.what());
        }
        if (!obj.is_object()) fail(ErrorCode::Parse, where() + "expected a JSON object");
        try {
            fn(line_no, obj);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Parse, where() + e.what());
        }
    }
}

inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
    for_each_jsonl_as<nlohmann::json>(path, fn);
}

/// Compact single-line serialization used by every JSONL writer.
std::string dump_line(const nlohmann::json& obj);

/// Shortest decimal form that parses back to the same value. Negative zero
/// is written as "-0.0" so JSON readers keep the sign.
std::string format_float(float v);
std::string format_double(double v);

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xFF));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Bounds-checked little-endian reader over an in-memory file image.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : m_data(data) {}

    std::size_t offset() const noexcept { return m_pos; }
    bool at_end() const noexcept { return m_pos == m_data.size(); }

    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = m_data.substr(m_pos, n);
        m_pos += n;
        return out;
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

private:
    void need(std::size_t n) const {
        if (m_data.size() - m_pos < n) {
            fail(ErrorCode::CorruptFile, "unexpected end of file at offset " + std::to_string(m_pos));
        }
    }

    std::uint64_t le(std::size_t n) {
        auto b = bytes(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{static_cast<unsigned char>(b[i])} << (8 * i);
        return v;
    }

    std::string_view m_data;
    std::size_t m_pos = 0;
};

}  // namespace ecsp::detail
