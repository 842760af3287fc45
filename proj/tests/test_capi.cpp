// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <string>

#include "ecsp/ecsp.h"
#include "support/test_support.hpp"

namespace et = ecsp::testing;

namespace {

std::string e2e(const char* name) { return (et::fixture_dir() / "e2e" / name).string(); }

}  // namespace

TEST_CASE("vocabulary") {
    CHECK(std::string(ecsp_version()).size() > 0);
    CHECK(ecsp_emotion_count() == 9);
    CHECK(std::string(ecsp_emotion_name(7)) == "sadness");
    CHECK(ecsp_emotion_name(9) == nullptr);
    size_t idx = 99;
    CHECK(ecsp_emotion_from_name("awe", &idx) == ECSP_OK);
    CHECK(idx == 1);
    CHECK(ecsp_emotion_from_name("joy", &idx) == ECSP_ERR_UNKNOWN_EMOTION);
    CHECK(std::string(ecsp_last_error()).find("joy") != std::string::npos);
    CHECK(std::string(ecsp_status_name(ECSP_ERR_TIMEOUT)) == "Timeout");
}

TEST_CASE("cosine") {
    const double a[] = {1, 1}, b[] = {1, 0}, z[] = {0, 0};
    double out = 0;
    CHECK(ecsp_cosine_similarity(a, b, 2, &out) == ECSP_OK);
    CHECK(out == doctest::Approx(0.7071067811865475));
    CHECK(ecsp_cosine_similarity(a, z, 2, &out) == ECSP_ERR_ZERO_VECTOR);
    CHECK(ecsp_cosine_similarity(nullptr, z, 2, &out) == ECSP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset, embeddings and index handles") {
    et::TempDir dir;
    ecsp_dataset* ds = nullptr;
    REQUIRE(ecsp_dataset_load(e2e("annotations.jsonl").c_str(), ECSP_FORMAT_AUTO, &ds) == ECSP_OK);
    CHECK(ecsp_dataset_size(ds) == 60);

    ecsp_embeddings* em = nullptr;
    REQUIRE(ecsp_embeddings_load(e2e("embeddings.jsonl").c_str(), &em) == ECSP_OK);
    CHECK(ecsp_embeddings_count(em) == 60);
    size_t dv = 0, dt = 0;
    ecsp_embeddings_dims(em, &dv, &dt);
    CHECK(dv == 8);
    CHECK(dt == 8);
    CHECK(ecsp_validate(ds, em) == ECSP_OK);

    const auto bin = (dir / "e.bin").string();
    uint64_t bytes = 0;
    CHECK(ecsp_embeddings_write_binary(em, bin.c_str(), &bytes) == ECSP_OK);
    CHECK(bytes == std::filesystem::file_size(bin));

    ecsp_index* ix = nullptr;
    REQUIRE(ecsp_index_build(ds, em, 0, &ix) == ECSP_OK);
    CHECK(ecsp_index_language_count(ix) == 3);
    const auto ipath = (dir / "i.bin").string();
    CHECK(ecsp_index_save(ix, ipath.c_str()) == ECSP_OK);
    ecsp_index* ix2 = nullptr;
    CHECK(ecsp_index_load(ipath.c_str(), &ix2) == ECSP_OK);

    char* json = nullptr;
    const float q[16] = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
    REQUIRE(ecsp_retrieve_one(ix2, "q", "english", q, 16, 1, 0.75, nullptr, &json) == ECSP_OK);
    CHECK(std::string(json).find("\"query_id\":\"q\"") != std::string::npos);
    ecsp_string_free(json);
    CHECK(ecsp_retrieve_one(ix2, "q", "klingon", q, 16, 1, 0.75, nullptr, &json) == ECSP_ERR_MISSING_LANGUAGE_INDEX);

    ecsp_index_free(ix2);
    ecsp_index_free(ix);
    ecsp_embeddings_free(em);
    ecsp_dataset_free(ds);
    ecsp_dataset_free(nullptr);
}

TEST_CASE("errors surface as status codes") {
    ecsp_dataset* ds = nullptr;
    CHECK(ecsp_dataset_load("/definitely/missing.jsonl", ECSP_FORMAT_JSONL, &ds) == ECSP_ERR_IO);
    CHECK(ds == nullptr);
    CHECK(std::strlen(ecsp_last_error()) > 0);
}

TEST_CASE("run through the C API") {
    et::TempDir dir;
    const std::string out = dir.path().string();
    const ecsp_setting overrides[] = {{"output_dir", out.c_str()}};
    char* summary = nullptr;
    REQUIRE(ecsp_run(e2e("run.cfg").c_str(), overrides, 1, &summary) == ECSP_OK);
    CHECK(std::string(summary).find("fixture-ensemble") != std::string::npos);
    ecsp_string_free(summary);
    CHECK(std::filesystem::exists(dir / "predictions.jsonl"));
}
