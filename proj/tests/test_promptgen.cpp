// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "ecsp/error.hpp"
#include "ecsp/ingest.hpp"
#include "ecsp/promptgen.hpp"
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

AnnotationRecord lake() {
    AnnotationRecord r;
    r.id = "a1";
    r.art_style = "Impressionism";
    r.language = LanguageTag::parse("english");
    r.utterance = "a calm lake at dawn";
    r.image_ref = "img/a1.jpg";
    r.split = Split::Test;
    return r;
}

RetrievalOutcome outcome_for(const std::string& id, std::optional<std::string> label) {
    RetrievalOutcome o;
    o.query_id = id;
    if (label) {
        o.pseudo_label = emotion_from_name(*label);
        o.gated_labels = {*o.pseudo_label};
        o.neighbors = {{"n", 0.9, *o.pseudo_label}};
    } else {
        o.neighbors = {{"n", 0.1, EmotionClass::from_index(0)}};
    }
    return o;
}

const std::string kLakeSimple =
    "The art style of image is Impressionism. There is a comment from a english person. What emotions did he "
    "express? amusement, awe, contentment, excitement, anger, disgust, fear, sadness or something else,a calm lake "
    "at dawn.";

std::string tokens(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
    return s;
}

}  // namespace

TEST_CASE("simple prompt") {
    CHECK(render_simple(lake()).text == kLakeSimple);
    auto r = lake();
    r.utterance = "";
    CHECK(code_of([&] { render_simple(r); }) == ErrorCode::Validation);
    r.utterance = "a {utterance} and {art_style}";
    CHECK(render_simple(r).text.find("else,a {utterance} and {art_style}.") != std::string::npos);
}

TEST_CASE("ecsp prompt") {
    const auto a = render_ecsp(lake(), outcome_for("a1", "contentment"));
    CHECK(a.text == kLakeSimple + " The emotion this picture is most likely trying to express is contentment.");
    CHECK(a.variant == PromptVariant::Ecsp);
    REQUIRE(a.pseudo_label_used);
    CHECK(a.pseudo_label_used->index() == 2);

    CHECK(render_ecsp(lake(), outcome_for("a1", std::nullopt)).text == kLakeSimple);
    CHECK(code_of([&] { render_ecsp(lake(), outcome_for("zz", "fear")); }) == ErrorCode::IdMismatch);

    const auto dup = render_ecsp(lake(), outcome_for("a1", "awe"), {true});
    CHECK(dup.text == kLakeSimple + " a calm lake at dawn. The emotion this picture is most likely trying to express is awe.");
}

TEST_CASE("pseudo-label-only prompt") {
    CHECK(render_pseudo_only(lake(), outcome_for("a1", "sadness")).text ==
          "a calm lake at dawn. The emotion this picture is most likely trying to express is sadness.");
    CHECK(render_pseudo_only(lake(), outcome_for("a1", std::nullopt)).text == "a calm lake at dawn");
    CHECK(code_of([&] { render_pseudo_only(lake(), outcome_for("b", "fear")); }) == ErrorCode::IdMismatch);
}

TEST_CASE("dispatcher") {
    const auto o = outcome_for("a1", "fear");
    CHECK(render(PromptVariant::Raw, lake(), nullptr, {}).text == "a calm lake at dawn");
    CHECK(render(PromptVariant::Sp, lake(), nullptr, {}).text == kLakeSimple);
    CHECK(render(PromptVariant::Ecsp, lake(), &o, {}).text == render_ecsp(lake(), o).text);
    CHECK(code_of([&] { render(PromptVariant::Pl, lake(), nullptr, {}); }) == ErrorCode::InvalidArgument);
    for (auto v : {PromptVariant::Sp, PromptVariant::Pl, PromptVariant::Ecsp, PromptVariant::Raw}) {
        CHECK(variant_from_name(variant_name(v)) == v);
    }
}

TEST_CASE("truncation") {
    auto t = truncate_tokens(tokens(5), 90);
    CHECK(t.text == tokens(5));
    CHECK_FALSE(t.truncated);

    t = truncate_tokens(tokens(100), 90);
    CHECK(t.text == tokens(90));
    CHECK(t.truncated);

    t = truncate_tokens("  first   second third", 1);
    CHECK(t.text == "  first");
    CHECK(t.truncated);

    CHECK_FALSE(truncate_tokens(tokens(90), 90).truncated);
}

TEST_CASE("truncation is idempotent and keeps a prefix") {
    et::Rng rng(17);
    const char* pieces[] = {"a", "bb", " ", "  ", "\t", "ccc", "\n"};
    for (int i = 0; i < 500; ++i) {
        std::string s;
        const int n = static_cast<int>(rng() % 60);
        for (int j = 0; j < n; ++j) s += pieces[rng() % 7];
        const std::size_t max = 1 + rng() % 20;
        const auto once = truncate_tokens(s, max);
        const auto twice = truncate_tokens(once.text, max);
        CHECK(twice.text == once.text);
        CHECK_FALSE(twice.truncated);
        CHECK(s.compare(0, once.text.size(), once.text) == 0);
    }
}

TEST_CASE("ecsp always begins with the simple prompt") {
    const auto recs = load_annotations(et::fixture_dir() / "prompts" / "records.jsonl", AnnotationFormat::Jsonl);
    const auto outs = load_outcomes_jsonl(et::fixture_dir() / "prompts" / "outcomes.jsonl");
    REQUIRE(recs.size() == outs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto sp = render_simple(recs[i]).text;
        const auto ecsp = render_ecsp(recs[i], outs[i]).text;
        CHECK(ecsp.compare(0, sp.size(), sp) == 0);
    }
}

TEST_CASE("prompt goldens") {
    const auto recs = load_annotations(et::fixture_dir() / "prompts" / "records.jsonl", AnnotationFormat::Jsonl);
    const auto outs = load_outcomes_jsonl(et::fixture_dir() / "prompts" / "outcomes.jsonl");
    const auto sp = et::lines_of(et::slurp(et::fixture_dir() / "prompts" / "golden_sp.txt"));
    const auto pl = et::lines_of(et::slurp(et::fixture_dir() / "prompts" / "golden_pl.txt"));
    const auto ec = et::lines_of(et::slurp(et::fixture_dir() / "prompts" / "golden_ecsp.txt"));
    REQUIRE(recs.size() == 20);
    REQUIRE(sp.size() == 20);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CAPTURE(i);
        CHECK(render_simple(recs[i]).text == sp[i]);
        CHECK(render_pseudo_only(recs[i], outs[i]).text == pl[i]);
        CHECK(render_ecsp(recs[i], outs[i]).text == ec[i]);
    }
}

TEST_CASE("prompt JSONL is stable") {
    et::TempDir dir;
    auto a = render_ecsp(lake(), outcome_for("a1", "something else"));
    truncate_artifact(a, 10);
    std::vector<PromptArtifact> v{a, render_simple(lake())};
    write_prompts_jsonl(v, dir / "p.jsonl");
    const auto back = load_prompts_jsonl(dir / "p.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].text == a.text);
    CHECK(back[0].truncated);
    CHECK(back[0].pseudo_label_used == a.pseudo_label_used);
    CHECK_FALSE(back[1].pseudo_label_used);
    CHECK(prompt_to_json_line(back[0]) == prompt_to_json_line(a));
    write_prompts_jsonl(back, dir / "q.jsonl");
    CHECK(et::slurp(dir / "p.jsonl") == et::slurp(dir / "q.jsonl"));
}
