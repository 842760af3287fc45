// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/ingest.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "io_util.hpp"
#include "text_util.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

std::string location(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::optional<std::uint32_t> parse_dimension(std::string_view field, std::string_view text, const std::string& where) {
    text = detail::trim(text);
    if (text.empty()) return std::nullopt;
    std::uint32_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorCode::Parse, where + ": " + std::string(field) + " is not a non-negative integer");
    }
    return v;
}

// Raw string fields collected from either input format before typing.
struct RawRecord {
    std::string id, art_style, language, utterance, split, image_ref, emotion;
    std::optional<std::uint32_t> width, height;
};

AnnotationRecord to_record(const RawRecord& raw, const std::string& where) {
    AnnotationRecord r;
    r.id = std::string(detail::trim(raw.id));
    r.art_style = raw.art_style;
    try {
        r.language = LanguageTag::parse(raw.language);
        r.split = split_from_name(raw.split);
    } catch (const Error& e) {
        fail(e.code(), where + ": " + e.what());
    }
    r.utterance = raw.utterance;
    r.image_ref = raw.image_ref;
    if (!detail::trim(raw.emotion).empty()) {
        try {
            r.gold_emotion = emotion_from_name(raw.emotion);
        } catch (const Error& e) {
            fail(ErrorCode::Validation, where + ": emotion: " + e.what());
        }
    }
    r.image_width = raw.width;
    r.image_height = raw.height;
    try {
        validate_record(r);
    } catch (const Error& e) {
        fail(e.code(), where + ": " + e.what());
    }
    return r;
}

template <class Json>
std::string json_string_field(const Json& obj, const char* key, bool required, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) fail(ErrorCode::Validation, where + ": " + key + ": missing field");
        return {};
    }
    if (!it->is_string()) fail(ErrorCode::Parse, where + ": " + key + " must be a string");
    return it->template get<std::string>();
}

std::optional<std::uint32_t> json_dim_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_unsigned()) fail(ErrorCode::Parse, where + ": " + key + " must be a non-negative integer");
    const auto v = it->get<std::uint64_t>();
    if (v > std::numeric_limits<std::uint32_t>::max()) fail(ErrorCode::Parse, where + ": " + key + " too large");
    return static_cast<std::uint32_t>(v);
}

std::vector<AnnotationRecord> load_annotations_jsonl(const std::filesystem::path& path) {
    std::vector<AnnotationRecord> out;
    detail::for_each_jsonl(path, [&](std::size_t line, const json& obj) {
        const auto where = location(path, line);
        RawRecord raw;
        raw.id = json_string_field(obj, "id", true, where);
        raw.art_style = json_string_field(obj, "art_style", true, where);
        raw.language = json_string_field(obj, "language", true, where);
        raw.utterance = json_string_field(obj, "utterance", true, where);
        raw.split = json_string_field(obj, "split", true, where);
        raw.image_ref = json_string_field(obj, "image_ref", false, where);
        raw.emotion = json_string_field(obj, "emotion", false, where);
        raw.width = json_dim_field(obj, "image_width", where);
        raw.height = json_dim_field(obj, "image_height", where);
        out.push_back(to_record(raw, where));
    });
    return out;
}

// RFC 4180 rows; quoted fields may contain separators, doubled quotes and newlines.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(std::string_view text, const std::filesystem::path& path) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.fields.size() == 1 && detail::trim(row.fields[0]).empty();
        if (!blank) rows.push_back(std::move(row));
        row = CsvRow{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (field_started) fail(ErrorCode::Parse, location(path, line) + ": stray quote inside unquoted field");
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            end_row();
            ++line;
            row.line = line;
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) fail(ErrorCode::Parse, location(path, row.line) + ": unterminated quoted field");
    if (field_started || !row.fields.empty() || !field.empty()) end_row();
    return rows;
}

std::vector<AnnotationRecord> load_annotations_csv(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto rows = parse_csv(text, path);
    std::vector<AnnotationRecord> out;
    if (rows.empty()) return out;

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
        column.emplace(detail::to_lower(detail::trim(rows[0].fields[i])), i);
    }
    for (const char* required : {"id", "art_style", "language", "utterance", "split"}) {
        if (!column.contains(required)) {
            fail(ErrorCode::Parse, location(path, rows[0].line) + ": missing column '" + required + "'");
        }
    }
    const std::size_t width = rows[0].fields.size();

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto where = location(path, row.line);
        if (row.fields.size() != width) {
            fail(ErrorCode::Parse, where + ": expected " + std::to_string(width) + " fields, got " +
                                       std::to_string(row.fields.size()));
        }
        auto get = [&](const char* name) -> std::string {
            auto it = column.find(name);
            return it == column.end() ? std::string{} : row.fields[it->second];
        };
        RawRecord raw;
        raw.id = get("id");
        raw.art_style = get("art_style");
        raw.language = get("language");
        raw.utterance = get("utterance");
        raw.split = get("split");
        raw.image_ref = get("image_ref");
        raw.emotion = get("emotion");
        raw.width = parse_dimension("image_width", get("image_width"), where);
        raw.height = parse_dimension("image_height", get("image_height"), where);
        out.push_back(to_record(raw, where));
    }
    return out;
}

void check_unique_ids(const std::vector<AnnotationRecord>& records) {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.id).second) fail(ErrorCode::DuplicateId, "duplicate id '" + r.id + "'");
    }
}

std::vector<float> json_float_array(const detail::float_json& obj, const char* key, const std::string& where,
                                    const std::string& id) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) fail(ErrorCode::Parse, where + ": " + key + " must be an array");
    std::vector<float> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number()) fail(ErrorCode::Parse, where + ": " + key + " must contain numbers");
        const float f = v.template get<float>();
        if (!std::isfinite(f)) fail(ErrorCode::Parse, where + ": non-finite value in " + key + " for id " + id);
        out.push_back(f);
    }
    return out;
}

void check_embedding(const JointEmbedding& e, const JointEmbedding& first) {
    if (e.image_dim() != first.image_dim() || e.text_dim() != first.text_dim()) {
        fail(ErrorCode::DimensionMismatch,
             "embedding '" + e.id() + "' has dims (" + std::to_string(e.image_dim()) + ", " +
                 std::to_string(e.text_dim()) + "), expected (" + std::to_string(first.image_dim()) + ", " +
                 std::to_string(first.text_dim()) + ")");
    }
    bool nonzero = false;
    for (float v : e.joint()) {
        if (!std::isfinite(v)) fail(ErrorCode::CorruptFile, "embedding '" + e.id() + "' has a non-finite value");
        nonzero = nonzero || v != 0.0F;
    }
    if (!nonzero) fail(ErrorCode::ZeroVector, "embedding '" + e.id() + "' is the zero vector");
}

std::vector<JointEmbedding> load_embeddings_jsonl(const std::filesystem::path& path) {
    std::vector<JointEmbedding> out;
    detail::for_each_jsonl_as<detail::float_json>(path, [&](std::size_t line, const detail::float_json& obj) {
        const auto where = location(path, line);
        const auto id = json_string_field(obj, "id", true, where);
        const auto image = json_float_array(obj, "image_embed", where, id);
        const auto text = json_float_array(obj, "text_embed", where, id);
        JointEmbedding e(id, image, text);
        check_embedding(e, out.empty() ? e : out.front());
        out.push_back(std::move(e));
    });
    return out;
}

std::vector<JointEmbedding> load_embeddings_binary(const std::string& data) {
    detail::ByteReader in(data);
    const auto magic = in.bytes(4);
    if (magic != std::string_view(kEmbeddingMagic, 4)) fail(ErrorCode::CorruptFile, "bad magic at offset 0");
    const auto version_offset = in.offset();
    if (in.u16() != kEmbeddingFormatVersion) {
        fail(ErrorCode::CorruptFile, "unsupported format version at offset " + std::to_string(version_offset));
    }
    const std::uint32_t image_dim = in.u32();
    const std::uint32_t text_dim = in.u32();
    const std::uint32_t count = in.u32();
    const std::size_t dim = std::size_t{image_dim} + text_dim;
    if (dim == 0 && count > 0) fail(ErrorCode::CorruptFile, "zero embedding dimension at offset 6");

    std::vector<JointEmbedding> out;
    out.reserve(count);
    std::vector<float> values(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto id_len = in.u16();
        std::string id(in.bytes(id_len));
        if (id.empty()) fail(ErrorCode::CorruptFile, "empty id at offset " + std::to_string(in.offset()));
        for (auto& v : values) v = in.f32();
        JointEmbedding e(std::move(id), std::span<const float>(values).first(image_dim),
                         std::span<const float>(values).subspan(image_dim));
        check_embedding(e, out.empty() ? e : out.front());
        out.push_back(std::move(e));
    }
    if (!in.at_end()) fail(ErrorCode::CorruptFile, "trailing bytes at offset " + std::to_string(in.offset()));
    return out;
}

}  // namespace

AnnotationFormat annotation_format_for(const std::filesystem::path& path) {
    return detail::to_lower(path.extension().string()) == ".csv" ? AnnotationFormat::Csv : AnnotationFormat::Jsonl;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, AnnotationFormat format) {
    auto records = format == AnnotationFormat::Csv ? load_annotations_csv(path) : load_annotations_jsonl(path);
    check_unique_ids(records);
    return records;
}

std::string annotation_to_json_line(const AnnotationRecord& r) {
    json obj = json::object();
    obj["id"] = r.id;
    obj["art_style"] = r.art_style;
    obj["language"] = r.language.value();
    obj["utterance"] = r.utterance;
    obj["split"] = std::string(split_name(r.split));
    obj["image_ref"] = r.image_ref;
    obj["emotion"] = r.gold_emotion ? json(std::string(r.gold_emotion->name())) : json(nullptr);
    if (r.image_width) obj["image_width"] = *r.image_width;
    if (r.image_height) obj["image_height"] = *r.image_height;
    return detail::dump_line(obj);
}

void write_annotations_jsonl(std::span<const AnnotationRecord> records, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& r : records) out << annotation_to_json_line(r) << '\n';
    detail::close_out(out, path);
}

std::vector<JointEmbedding> load_embeddings(const std::filesystem::path& path) {
    std::string data = detail::read_file(path);
    if (data.size() >= 4 && std::string_view(data).substr(0, 4) == std::string_view(kEmbeddingMagic, 4)) {
        return load_embeddings_binary(data);
    }
    data.clear();
    return load_embeddings_jsonl(path);
}

std::uint64_t packed_embedding_size(std::span<const std::string> ids, std::size_t image_dim, std::size_t text_dim) {
    std::uint64_t size = kEmbeddingHeaderBytes;
    for (const auto& id : ids) size += 2 + id.size() + 4 * (image_dim + text_dim);
    return size;
}

std::uint64_t write_embeddings_binary(std::span<const JointEmbedding> embeddings, const std::filesystem::path& path) {
    if (embeddings.empty()) fail(ErrorCode::InvalidArgument, "cannot write an empty embedding list");
    const auto& first = embeddings.front();
    if (first.image_dim() > std::numeric_limits<std::uint32_t>::max() ||
        first.text_dim() > std::numeric_limits<std::uint32_t>::max() ||
        embeddings.size() > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorCode::InvalidArgument, "embedding list too large for the packed format");
    }

    std::string buf;
    buf.append(kEmbeddingMagic, 4);
    detail::put_u16(buf, kEmbeddingFormatVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(first.image_dim()));
    detail::put_u32(buf, static_cast<std::uint32_t>(first.text_dim()));
    detail::put_u32(buf, static_cast<std::uint32_t>(embeddings.size()));
    for (const auto& e : embeddings) {
        check_embedding(e, first);
        if (e.id().empty() || e.id().size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(ErrorCode::InvalidArgument, "embedding id length out of range: '" + e.id() + "'");
        }
        detail::put_u16(buf, static_cast<std::uint16_t>(e.id().size()));
        buf += e.id();
        for (float v : e.joint()) detail::put_f32(buf, v);
    }

    auto out = detail::open_out(path, std::ios::out | std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    detail::close_out(out, path);
    return buf.size();
}

void write_embeddings_jsonl(std::span<const JointEmbedding> embeddings, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    auto write_array = [&](std::span<const float> values) {
        out << '[';
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out << ',';
            out << detail::format_float(values[i]);
        }
        out << ']';
    };
    for (const auto& e : embeddings) {
        out << "{\"id\":" << json(e.id()).dump() << ",\"image_embed\":";
        write_array(e.image_part());
        out << ",\"text_embed\":";
        write_array(e.text_part());
        out << "}\n";
    }
    detail::close_out(out, path);
}

DatasetManifest make_manifest(std::vector<AnnotationRecord> records, std::span<const JointEmbedding> embeddings) {
    DatasetManifest m;
    std::unordered_set<std::string_view> ids;
    for (const auto& r : records) ids.insert(r.id);
    for (const auto& e : embeddings) {
        if (!ids.contains(e.id())) fail(ErrorCode::Validation, "id: embedding '" + e.id() + "' has no annotation record");
        check_embedding(e, embeddings.front());
    }
    if (!embeddings.empty()) {
        m.embedding_dim_image = embeddings.front().image_dim();
        m.embedding_dim_text = embeddings.front().text_dim();
    }
    for (const auto& r : records) {
        auto& c = m.counts[r.language.value()];
        switch (r.split) {
            case Split::Train: ++c.train; break;
            case Split::Val: ++c.val; break;
            case Split::Test: ++c.test; break;
        }
    }
    m.records = std::move(records);
    return m;
}

}  // namespace ecsp
