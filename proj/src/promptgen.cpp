// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/promptgen.hpp"

#include <cctype>

#include "io_util.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

constexpr std::string_view kArtStylePrefix = "The art style of image is ";
constexpr std::string_view kLanguagePrefix = ". There is a comment from a ";
constexpr std::string_view kQuestion =
    " person. What emotions did he express? amusement, awe, contentment, excitement, anger, disgust, fear, "
    "sadness or something else,";
constexpr std::string_view kPseudoLabelPrefix = "The emotion this picture is most likely trying to express is ";

std::string pseudo_sentence(const std::string& labels) {
    std::string s(kPseudoLabelPrefix);
    s += labels;
    s += '.';
    return s;
}

void check_ids(const AnnotationRecord& record, const RetrievalOutcome& outcome) {
    if (outcome.query_id != record.id) {
        fail(ErrorCode::IdMismatch, "retrieval outcome for '" + outcome.query_id + "' used with record '" + record.id + "'");
    }
}

}  // namespace

std::string_view variant_name(PromptVariant v) noexcept {
    switch (v) {
        case PromptVariant::Sp: return "sp";
        case PromptVariant::Pl: return "pl";
        case PromptVariant::Ecsp: return "ecsp";
        case PromptVariant::Raw: return "raw";
    }
    return "sp";
}

PromptVariant variant_from_name(std::string_view name) {
    if (name == "sp") return PromptVariant::Sp;
    if (name == "pl") return PromptVariant::Pl;
    if (name == "ecsp") return PromptVariant::Ecsp;
    if (name == "raw") return PromptVariant::Raw;
    fail(ErrorCode::InvalidArgument, "unknown prompt variant '" + std::string(name) + "'");
}

PromptArtifact render_simple(const AnnotationRecord& record) {
    validate_record(record);
    PromptArtifact a;
    a.sample_id = record.id;
    a.variant = PromptVariant::Sp;
    // Plain concatenation: braces inside field values are never re-expanded.
    a.text.reserve(kArtStylePrefix.size() + kLanguagePrefix.size() + kQuestion.size() + record.art_style.size() +
                   record.language.value().size() + record.utterance.size() + 1);
    a.text += kArtStylePrefix;
    a.text += record.art_style;
    a.text += kLanguagePrefix;
    a.text += record.language.value();
    a.text += kQuestion;
    a.text += record.utterance;
    a.text += '.';
    return a;
}

PromptArtifact render_ecsp(const AnnotationRecord& record, const RetrievalOutcome& outcome, PromptOptions options) {
    check_ids(record, outcome);
    PromptArtifact a = render_simple(record);
    a.variant = PromptVariant::Ecsp;
    if (!outcome.pseudo_label) return a;

    a.pseudo_label_used = outcome.pseudo_label;
    a.pseudo_label_text = outcome.pseudo_label_text();
    if (options.duplicate_utterance) {
        a.text += ' ';
        a.text += record.utterance;
        a.text += '.';
    }
    a.text += ' ';
    a.text += pseudo_sentence(a.pseudo_label_text);
    return a;
}

PromptArtifact render_pseudo_only(const AnnotationRecord& record, const RetrievalOutcome& outcome) {
    check_ids(record, outcome);
    PromptArtifact a = render_raw(record);
    a.variant = PromptVariant::Pl;
    if (!outcome.pseudo_label) return a;

    a.pseudo_label_used = outcome.pseudo_label;
    a.pseudo_label_text = outcome.pseudo_label_text();
    a.text += ". ";
    a.text += pseudo_sentence(a.pseudo_label_text);
    return a;
}

PromptArtifact render_raw(const AnnotationRecord& record) {
    validate_record(record);
    PromptArtifact a;
    a.sample_id = record.id;
    a.variant = PromptVariant::Raw;
    a.text = record.utterance;
    return a;
}

PromptArtifact render(PromptVariant variant, const AnnotationRecord& record, const RetrievalOutcome* outcome,
                      PromptOptions options) {
    if ((variant == PromptVariant::Ecsp || variant == PromptVariant::Pl) && !outcome) {
        fail(ErrorCode::InvalidArgument, "variant " + std::string(variant_name(variant)) + " needs a retrieval outcome for '" +
                                             record.id + "'");
    }
    switch (variant) {
        case PromptVariant::Sp: return render_simple(record);
        case PromptVariant::Pl: return render_pseudo_only(record, *outcome);
        case PromptVariant::Ecsp: return render_ecsp(record, *outcome, options);
        case PromptVariant::Raw: return render_raw(record);
    }
    return render_simple(record);
}

Truncation truncate_tokens(std::string_view text, std::size_t max_tokens) {
    if (max_tokens == 0) max_tokens = 1;
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t tokens = 0;
    std::size_t kept_end = 0;  // one past the last kept token
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        if (tokens == max_tokens) return {std::string(text.substr(0, kept_end)), true};
        ++tokens;
        while (i < text.size() && !is_space(text[i])) ++i;
        kept_end = i;
    }
    return {std::string(text), false};
}

void truncate_artifact(PromptArtifact& artifact, std::size_t max_tokens) {
    auto t = truncate_tokens(artifact.text, max_tokens);
    artifact.text = std::move(t.text);
    artifact.truncated = artifact.truncated || t.truncated;
}

std::string prompt_to_json_line(const PromptArtifact& a) {
    json obj = json::object();
    obj["sample_id"] = a.sample_id;
    obj["variant"] = std::string(variant_name(a.variant));
    obj["text"] = a.text;
    obj["pseudo_label"] = a.pseudo_label_text.empty() ? json(nullptr) : json(a.pseudo_label_text);
    obj["truncated"] = a.truncated;
    return detail::dump_line(obj);
}

namespace {

PromptArtifact prompt_from_json(const json& obj) {
    PromptArtifact a;
    a.sample_id = obj.at("sample_id").get<std::string>();
    a.variant = variant_from_name(obj.at("variant").get<std::string>());
    a.text = obj.at("text").get<std::string>();
    const auto& pl = obj.at("pseudo_label");
    if (!pl.is_null()) {
        a.pseudo_label_text = pl.get<std::string>();
        const auto first = a.pseudo_label_text.substr(0, a.pseudo_label_text.find(", "));
        a.pseudo_label_used = emotion_from_name(first);
    }
    a.truncated = obj.at("truncated").get<bool>();
    return a;
}

}  // namespace

PromptArtifact prompt_from_json_line(std::string_view line) {
    try {
        return prompt_from_json(json::parse(line));
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("prompt: ") + e.what());
    }
}

void write_prompts_jsonl(std::span<const PromptArtifact> prompts, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& p : prompts) out << prompt_to_json_line(p) << '\n';
    detail::close_out(out, path);
}

std::vector<PromptArtifact> load_prompts_jsonl(const std::filesystem::path& path) {
    std::vector<PromptArtifact> out;
    detail::for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(prompt_from_json(obj)); });
    return out;
}

}  // namespace ecsp
