// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>

#include "support/test_support.hpp"

namespace et = ecsp::testing;

#ifndef ECSP_CLI_PATH
#error "ECSP_CLI_PATH must be defined"
#endif

namespace {

struct CliResult {
    int status;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

CliResult cli(const et::TempDir& dir, const std::vector<std::string>& args) {
    std::string cmd = quote(ECSP_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote((dir / "stdout").string()) + " 2>" + quote((dir / "stderr").string());
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, et::slurp(dir / "stdout"), et::slurp(dir / "stderr")};
}

std::string fx(const char* name) { return (et::fixture_dir() / "e2e" / name).string(); }

}  // namespace

TEST_CASE("retrieve with eta above any cosine gates everything") {
    et::TempDir dir;
    const auto out = (dir / "r.jsonl").string();
    const auto r = cli(dir, {"retrieve", "--annotations", fx("annotations.jsonl"), "--embeddings", fx("embeddings.jsonl"),
                             "--split", "all", "--eta", "2.0", "--out", out});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    const auto lines = et::lines_of(et::slurp(out));
    CHECK(lines.size() == 60);
    for (const auto& l : lines) CHECK(nlohmann::json::parse(l)["pseudo_label"].is_null());
}

TEST_CASE("score on perfect predictions") {
    et::TempDir dir;
    std::string preds;
    for (const auto& line : et::lines_of(et::slurp(fx("annotations.jsonl")))) {
        const auto rec = nlohmann::json::parse(line);
        std::vector<double> p(9, 0.0);
        static const std::vector<std::string> names{"amusement", "awe",     "contentment", "excitement",    "anger",
                                                    "disgust",   "fear",    "sadness",     "something else"};
        const auto idx = std::find(names.begin(), names.end(), rec["emotion"].get<std::string>()) - names.begin();
        p[static_cast<std::size_t>(idx)] = 1.0;
        preds += nlohmann::json{{"sample_id", rec["id"]}, {"probs", p}, {"predicted", rec["emotion"]}, {"backends", {"x"}}}.dump() + "\n";
    }
    et::spit(dir / "p.jsonl", preds);
    const auto r = cli(dir, {"score", "--annotations", fx("annotations.jsonl"), "--predictions", (dir / "p.jsonl").string()});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(r.out.find("1.000  1.000") != std::string::npos);
}

TEST_CASE("errors are one JSON line on stderr") {
    et::TempDir dir;
    const auto r = cli(dir, {"ingest", "--annotations", (dir / "missing.jsonl").string(), "--embeddings",
                             fx("embeddings.jsonl"), "--out", (dir / "x.bin").string()});
    CHECK(r.status == 1);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["error"] == "IoError");
    CHECK(j["code"] == 2);
}

TEST_CASE("run equals the chained subcommands") {
    et::TempDir dir;
    const auto run_dir = (dir / "run").string();
    auto r = cli(dir, {"run", "--config", fx("run.cfg"), "--output-dir", run_dir});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(r.out.find("fixture-ensemble") != std::string::npos);

    const std::vector<std::string> data{"--annotations", fx("annotations.jsonl"), "--embeddings", fx("embeddings.jsonl")};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), data.begin(), data.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    const auto p = [&](const char* n) { return (dir / n).string(); };
    REQUIRE(cli(dir, with({"ingest"}, {"--out", p("embeddings.bin")})).status == 0);
    REQUIRE(cli(dir, with({"index"}, {"--out", p("index.bin")})).status == 0);
    REQUIRE(cli(dir, with({"retrieve"}, {"--index", p("index.bin"), "--split", "all", "--out", p("retrieval.jsonl")})).status == 0);
    REQUIRE(cli(dir, {"prompt", "--annotations", fx("annotations.jsonl"), "--retrieval", p("retrieval.jsonl"), "--split", "all",
                      "--out", p("prompts.jsonl")}).status == 0);
    REQUIRE(cli(dir, {"tta-plan", "--annotations", fx("annotations.jsonl"), "--seed", "7", "--split", "all", "--out",
                      p("tta_plans.jsonl")}).status == 0);
    REQUIRE(cli(dir, {"fuse", "--probs", fx("probs_xlmr.jsonl"), fx("probs_x2vlm.jsonl"), "--ensemble", fx("ensemble.cfg"),
                      "--out", p("predictions.jsonl")}).status == 0);
    const auto s = cli(dir, {"score", "--annotations", fx("annotations.jsonl"), "--predictions", p("predictions.jsonl"),
                             "--method", "fixture-ensemble", "--json", p("scores.json")});
    REQUIRE(s.status == 0);

    for (const char* f : {"embeddings.bin", "index.bin", "retrieval.jsonl", "prompts.jsonl", "tta_plans.jsonl",
                          "predictions.jsonl", "scores.json"}) {
        CAPTURE(f);
        CHECK(et::slurp(dir / f) == et::slurp(std::filesystem::path(run_dir) / f));
    }
    CHECK(s.out == et::slurp(std::filesystem::path(run_dir) / "report.txt"));
}
