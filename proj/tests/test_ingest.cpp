// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cstring>

#include "ecsp/error.hpp"
#include "ecsp/ingest.hpp"
#include "support/test_support.hpp"

using namespace ecsp;
using ecsp::testing::TempDir;
using ecsp::testing::spit;
using ecsp::testing::slurp;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

constexpr const char* kA1 =
    R"({"id":"a1","art_style":"Impressionism","language":"english","utterance":"a calm lake","split":"train","emotion":"contentment","image_ref":"img/a1.jpg"})";

std::vector<JointEmbedding> random_embeddings(std::size_t n, std::size_t dv, std::size_t dt, std::uint64_t seed) {
    ecsp::testing::Rng rng(seed);
    std::vector<JointEmbedding> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto img = ecsp::testing::random_vector(rng, dv);
        auto txt = ecsp::testing::random_vector(rng, dt);
        out.emplace_back("e" + std::to_string(i), img, txt);
    }
    return out;
}

bool bit_equal(const std::vector<JointEmbedding>& a, const std::vector<JointEmbedding>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].id() != b[i].id() || a[i].image_dim() != b[i].image_dim()) return false;
        const auto x = a[i].joint();
        const auto y = b[i].joint();
        if (x.size() != y.size()) return false;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (std::bit_cast<std::uint32_t>(x[j]) != std::bit_cast<std::uint32_t>(y[j])) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("annotation JSONL") {
    TempDir dir;
    SUBCASE("single record") {
        spit(dir / "a.jsonl", std::string(kA1) + "\n");
        const auto recs = load_annotations(dir / "a.jsonl", AnnotationFormat::Jsonl);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].id == "a1");
        REQUIRE(recs[0].gold_emotion);
        CHECK(recs[0].gold_emotion->index() == 2);
        CHECK(recs[0].language.value() == "english");
        CHECK(recs[0].split == Split::Train);
    }
    SUBCASE("empty file") {
        spit(dir / "e.jsonl", "");
        CHECK(load_annotations(dir / "e.jsonl", AnnotationFormat::Jsonl).empty());
    }
    SUBCASE("duplicate id") {
        spit(dir / "d.jsonl", std::string(kA1) + "\n" + kA1 + "\n");
        CHECK(code_of([&] { load_annotations(dir / "d.jsonl", AnnotationFormat::Jsonl); }) == ErrorCode::DuplicateId);
    }
    SUBCASE("malformed line reports its line number") {
        spit(dir / "m.jsonl", std::string(kA1) + "\n{not json\n");
        try {
            load_annotations(dir / "m.jsonl", AnnotationFormat::Jsonl);
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Parse);
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
    SUBCASE("unknown emotion is a validation error") {
        std::string line = kA1;
        line.replace(line.find("contentment"), 11, "joy");
        spit(dir / "u.jsonl", line + "\n");
        CHECK(code_of([&] { load_annotations(dir / "u.jsonl", AnnotationFormat::Jsonl); }) == ErrorCode::Validation);
    }
    SUBCASE("missing file") {
        CHECK(code_of([&] { load_annotations(dir / "nope.jsonl", AnnotationFormat::Jsonl); }) == ErrorCode::Io);
    }
}

TEST_CASE("annotation CSV maps columns by header") {
    TempDir dir;
    spit(dir / "a.csv",
         "utterance,id,emotion,split,language,art_style,image_ref\n"
         "\"a calm lake, at dawn\",a1,contentment,train,English,Impressionism,img/a1.jpg\n"
         "\"she said \"\"no\"\"\",a2,,test,arabic,Baroque,img/a2.jpg\n");
    CHECK(annotation_format_for(dir / "a.csv") == AnnotationFormat::Csv);
    const auto recs = load_annotations(dir / "a.csv", AnnotationFormat::Csv);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].utterance == "a calm lake, at dawn");
    CHECK(recs[0].language.value() == "english");
    CHECK(recs[0].gold_emotion->index() == 2);
    CHECK(recs[1].utterance == "she said \"no\"");
    CHECK_FALSE(recs[1].gold_emotion);
    CHECK(recs[1].split == Split::Test);
}

TEST_CASE("annotation JSONL write/read is stable") {
    TempDir dir;
    const auto recs = load_annotations(ecsp::testing::fixture_dir() / "e2e" / "annotations.jsonl", AnnotationFormat::Jsonl);
    REQUIRE(recs.size() == 60);
    write_annotations_jsonl(recs, dir / "1.jsonl");
    const auto again = load_annotations(dir / "1.jsonl", AnnotationFormat::Jsonl);
    CHECK(again == recs);
    write_annotations_jsonl(again, dir / "2.jsonl");
    CHECK(slurp(dir / "1.jsonl") == slurp(dir / "2.jsonl"));
}

TEST_CASE("embedding JSONL validation") {
    TempDir dir;
    SUBCASE("concatenation") {
        spit(dir / "e.jsonl", R"({"id":"x","image_embed":[1,0],"text_embed":[0,1]})" "\n");
        const auto e = load_embeddings(dir / "e.jsonl");
        REQUIRE(e.size() == 1);
        CHECK(std::vector<float>(e[0].joint().begin(), e[0].joint().end()) == std::vector<float>{1, 0, 0, 1});
    }
    SUBCASE("dimension change") {
        spit(dir / "e.jsonl", R"({"id":"x","image_embed":[1,0,0],"text_embed":[0,1]})" "\n"
                              R"({"id":"y","image_embed":[1,0],"text_embed":[0,1]})" "\n");
        CHECK(code_of([&] { load_embeddings(dir / "e.jsonl"); }) == ErrorCode::DimensionMismatch);
    }
    SUBCASE("zero vector") {
        spit(dir / "e.jsonl", R"({"id":"x","image_embed":[0,0],"text_embed":[0,0]})" "\n");
        CHECK(code_of([&] { load_embeddings(dir / "e.jsonl"); }) == ErrorCode::ZeroVector);
    }
}

TEST_CASE("packed embeddings") {
    TempDir dir;
    SUBCASE("empty list is rejected") {
        std::vector<JointEmbedding> none;
        CHECK(code_of([&] { write_embeddings_binary(none, dir / "x.bin"); }) == ErrorCode::InvalidArgument);
    }
    SUBCASE("file size for one 512+512 entry") {
        const auto e = random_embeddings(1, 512, 512, 3);
        const auto written = write_embeddings_binary(e, dir / "one.bin");
        // magic 4 + version 2 + d_v 4 + d_t 4 + count 4, then u16 length + "e0", then 1024 floats.
        const std::uint64_t expected = (4 + 2 + 4 + 4 + 4) + (2 + 2) + 1024 * 4;
        CHECK(written == expected);
        CHECK(std::filesystem::file_size(dir / "one.bin") == expected);
        const std::vector<std::string> ids{"e0"};
        CHECK(packed_embedding_size(ids, 512, 512) == expected);
    }
    SUBCASE("100 random embeddings round-trip bit for bit") {
        const auto e = random_embeddings(100, 24, 40, 11);
        write_embeddings_binary(e, dir / "r.bin");
        CHECK(bit_equal(load_embeddings(dir / "r.bin"), e));
    }
    SUBCASE("text -> binary -> text keeps every bit pattern") {
        auto e = random_embeddings(50, 16, 16, 12);
        write_embeddings_jsonl(e, dir / "a.jsonl");
        const auto from_text = load_embeddings(dir / "a.jsonl");
        CHECK(bit_equal(from_text, e));
        write_embeddings_binary(from_text, dir / "b.bin");
        const auto from_bin = load_embeddings(dir / "b.bin");
        write_embeddings_jsonl(from_bin, dir / "c.jsonl");
        CHECK(bit_equal(from_bin, e));
        CHECK(slurp(dir / "a.jsonl") == slurp(dir / "c.jsonl"));
    }
    SUBCASE("truncated file") {
        const auto e = random_embeddings(3, 4, 4, 5);
        write_embeddings_binary(e, dir / "t.bin");
        auto bytes = slurp(dir / "t.bin");
        bytes.resize(bytes.size() - 7);
        spit(dir / "t.bin", bytes);
        CHECK(code_of([&] { load_embeddings(dir / "t.bin"); }) == ErrorCode::CorruptFile);
    }
}

TEST_CASE("manifest cross-checks embeddings") {
    const auto recs = load_annotations(ecsp::testing::fixture_dir() / "e2e" / "annotations.jsonl", AnnotationFormat::Jsonl);
    const auto embs = load_embeddings(ecsp::testing::fixture_dir() / "e2e" / "embeddings.jsonl");
    const auto m = make_manifest(recs, embs);
    CHECK(m.embedding_dim_image == 8);
    CHECK(m.embedding_dim_text == 8);
    REQUIRE(m.counts.size() == 3);
    CHECK(m.counts.at("english").train == 12);
    CHECK(m.counts.at("arabic").val == 4);
    CHECK(m.counts.at("chinese").test == 4);

    const float v[] = {1.0f};
    std::vector<JointEmbedding> stray{JointEmbedding("zz", v, v)};
    CHECK(code_of([&] { make_manifest(recs, stray); }) == ErrorCode::Validation);
}
