// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecsp/ecsp.h"

namespace {

struct CliFailure {
    ecsp_status status;
    std::string message;
};

void check(ecsp_status status) {
    if (status != ECSP_OK) throw CliFailure{status, ecsp_last_error()};
}

void usage_error(const std::string& message) { throw CliFailure{ECSP_ERR_INVALID_ARGUMENT, message}; }

struct DatasetDeleter {
    void operator()(ecsp_dataset* d) const { ecsp_dataset_free(d); }
};
struct EmbeddingsDeleter {
    void operator()(ecsp_embeddings* e) const { ecsp_embeddings_free(e); }
};
struct IndexDeleter {
    void operator()(ecsp_index* i) const { ecsp_index_free(i); }
};
struct StringDeleter {
    void operator()(char* s) const { ecsp_string_free(s); }
};

using Dataset = std::unique_ptr<ecsp_dataset, DatasetDeleter>;
using Embeddings = std::unique_ptr<ecsp_embeddings, EmbeddingsDeleter>;
using Index = std::unique_ptr<ecsp_index, IndexDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

ecsp_annotation_format parse_format(const std::string& name) {
    if (name == "jsonl") return ECSP_FORMAT_JSONL;
    if (name == "csv") return ECSP_FORMAT_CSV;
    return ECSP_FORMAT_AUTO;
}

Dataset load_dataset(const std::string& path, const std::string& format) {
    ecsp_dataset* raw = nullptr;
    check(ecsp_dataset_load(path.c_str(), parse_format(format), &raw));
    return Dataset(raw);
}

Embeddings load_embeddings(const std::string& path) {
    ecsp_embeddings* raw = nullptr;
    check(ecsp_embeddings_load(path.c_str(), &raw));
    return Embeddings(raw);
}

Index build_index(const ecsp_dataset* ds, const ecsp_embeddings* emb, bool normalize_parts) {
    ecsp_index* raw = nullptr;
    check(ecsp_index_build(ds, emb, normalize_parts ? 1 : 0, &raw));
    return Index(raw);
}

std::pair<std::uint32_t, std::uint32_t> parse_size(const std::string& text) {
    unsigned w = 0, h = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%ux%u%c", &w, &h, &tail) != 2 || w == 0 || h == 0) {
        usage_error("--target expects WxH with positive integers, got '" + text + "'");
    }
    return {w, h};
}

struct DataArgs {
    std::string annotations;
    std::string format = "auto";
    std::string embeddings;
};

void add_data_options(CLI::App* cmd, DataArgs& args, bool need_embeddings) {
    cmd->add_option("--annotations", args.annotations, "Annotation file (JSONL or CSV)")->required();
    cmd->add_option("--format", args.format, "Annotation format")
        ->check(CLI::IsMember({"auto", "jsonl", "csv"}))
        ->capture_default_str();
    auto* emb = cmd->add_option("--embeddings", args.embeddings, "Embedding file (JSONL or packed binary)");
    if (need_embeddings) emb->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented prompt construction and ensemble inference engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ecsp_version()));

    // ingest
    DataArgs ingest_args;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Validate annotations and embeddings, write the packed embedding file");
    add_data_options(ingest, ingest_args, true);
    ingest->add_option("--out", ingest_out, "Packed embedding output path")->required();

    // index
    DataArgs index_args;
    std::string index_out;
    bool index_normalize_parts = false;
    auto* index = app.add_subcommand("index", "Build per-language retrieval indices from the train split");
    add_data_options(index, index_args, true);
    index->add_option("--out", index_out, "Index output path")->required();
    index->add_flag("--normalize-parts", index_normalize_parts, "Normalize image and text parts separately");

    // retrieve
    DataArgs retrieve_args;
    std::string retrieve_index, retrieve_out;
    ecsp_retrieve_options retrieve_opts;
    ecsp_retrieve_options_init(&retrieve_opts);
    std::string retrieve_split = "all";
    bool no_exclude_self = false;
    bool retrieve_normalize_parts = false;
    auto* retrieve = app.add_subcommand("retrieve", "Emit retrieval-outcome JSONL");
    add_data_options(retrieve, retrieve_args, true);
    retrieve->add_option("--index", retrieve_index, "Prebuilt index (built from the train split when omitted)");
    retrieve->add_option("--split", retrieve_split, "Query split")
        ->check(CLI::IsMember({"all", "train", "val", "test"}))
        ->capture_default_str();
    retrieve->add_option("--eta", retrieve_opts.eta, "Similarity threshold")->capture_default_str();
    retrieve->add_option("--k", retrieve_opts.k, "Neighbors per query")->check(CLI::PositiveNumber)->capture_default_str();
    retrieve->add_flag("--no-exclude-self", no_exclude_self, "Allow a query to retrieve its own id");
    retrieve->add_flag("--normalize-parts", retrieve_normalize_parts, "Normalize image and text parts separately");
    retrieve->add_option("--out", retrieve_out, "Output path")->required();

    // prompt
    DataArgs prompt_args;
    std::string prompt_retrieval, prompt_out, prompt_variant = "ecsp", prompt_split = "all";
    std::size_t prompt_max_tokens = 0;
    bool duplicate_utterance = false;
    auto* prompt = app.add_subcommand("prompt", "Emit prompt JSONL");
    add_data_options(prompt, prompt_args, false);
    prompt->add_option("--retrieval", prompt_retrieval, "Retrieval-outcome JSONL (needed for pl and ecsp)");
    prompt->add_option("--variant", prompt_variant, "Prompt variant")
        ->check(CLI::IsMember({"sp", "pl", "ecsp", "raw"}))
        ->capture_default_str();
    prompt->add_option("--max-tokens", prompt_max_tokens, "Whitespace-token limit (0 = none)")->capture_default_str();
    prompt->add_flag("--duplicate-utterance", duplicate_utterance, "Repeat the utterance before the pseudo-label sentence");
    prompt->add_option("--split", prompt_split, "Split to render")
        ->check(CLI::IsMember({"all", "train", "val", "test"}))
        ->capture_default_str();
    prompt->add_option("--out", prompt_out, "Output path")->required();

    // tta-plan
    DataArgs plan_args;
    std::string plan_out, plan_target = "768x768", plan_split = "all";
    ecsp_tta_options plan_opts;
    ecsp_tta_options_init(&plan_opts);
    auto* plan = app.add_subcommand("tta-plan", "Emit test-time augmentation plans");
    add_data_options(plan, plan_args, false);
    plan->add_option("--crop-fraction", plan_opts.crop_fraction, "Crop side as a fraction of the source")
        ->capture_default_str();
    plan->add_option("--seed", plan_opts.seed, "Crop offset seed")->capture_default_str();
    plan->add_option("--target", plan_target, "Model input size WxH")->capture_default_str();
    plan->add_option("--split", plan_split, "Split to plan")
        ->check(CLI::IsMember({"all", "train", "val", "test"}))
        ->capture_default_str();
    plan->add_option("--out", plan_out, "Output path")->required();

    // fuse
    std::vector<std::string> fuse_probs;
    std::string fuse_ensemble, fuse_out;
    bool fuse_no_tta = false;
    auto* fuse = app.add_subcommand("fuse", "Aggregate TTA variants and fuse backends into predictions JSONL");
    fuse->add_option("--probs", fuse_probs, "Probability JSONL files")->required();
    fuse->add_option("--ensemble", fuse_ensemble, "Ensemble weights file (equal weights when omitted)");
    fuse->add_flag("--no-tta", fuse_no_tta, "Use identity rows instead of averaging variants");
    fuse->add_option("--out", fuse_out, "Output path")->required();

    // score
    DataArgs score_args;
    std::string score_predictions, score_average = "macro", score_method = "ensemble", score_json;
    bool by_language = false;
    auto* score = app.add_subcommand("score", "Print F1/accuracy for predictions against gold labels");
    add_data_options(score, score_args, false);
    score->add_option("--predictions", score_predictions, "Predictions JSONL")->required();
    score->add_option("--average", score_average, "F1 averaging shown in the table")
        ->check(CLI::IsMember({"macro", "micro", "weighted"}))
        ->capture_default_str();
    score->add_flag("--by-language", by_language, "Add one row per language");
    score->add_option("--method", score_method, "Row label")->capture_default_str();
    score->add_option("--json", score_json, "Also write scores JSON here");

    // run
    std::string run_config;
    std::optional<double> run_eta;
    std::optional<std::size_t> run_k;
    std::optional<std::uint64_t> run_seed;
    std::string run_output_dir, run_remote;
    std::vector<std::string> run_sets;
    auto* run = app.add_subcommand("run", "Full pipeline from one config file");
    run->add_option("--config", run_config, "Run config (key = value)")->required();
    run->add_option("--eta", run_eta, "Override eta");
    run->add_option("--k", run_k, "Override k")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_seed, "Override seed");
    run->add_option("--output-dir", run_output_dir, "Override output directory");
    run->add_option("--remote", run_remote, "Send every backend to this model server URL");
    run->add_option("--set", run_sets, "Extra key=value overrides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*ingest) {
            auto ds = load_dataset(ingest_args.annotations, ingest_args.format);
            auto emb = load_embeddings(ingest_args.embeddings);
            check(ecsp_validate(ds.get(), emb.get()));
            std::uint64_t bytes = 0;
            check(ecsp_embeddings_write_binary(emb.get(), ingest_out.c_str(), &bytes));
            std::size_t dv = 0, dt = 0;
            check(ecsp_embeddings_dims(emb.get(), &dv, &dt));
            std::cout << "records " << ecsp_dataset_size(ds.get()) << "\nembeddings " << ecsp_embeddings_count(emb.get())
                      << "\ndims " << dv << "+" << dt << "\nbytes " << bytes << "\n";
        } else if (*index) {
            auto ds = load_dataset(index_args.annotations, index_args.format);
            auto emb = load_embeddings(index_args.embeddings);
            auto idx = build_index(ds.get(), emb.get(), index_normalize_parts);
            check(ecsp_index_save(idx.get(), index_out.c_str()));
            for (std::size_t i = 0; i < ecsp_index_language_count(idx.get()); ++i) {
                const char* name = nullptr;
                std::size_t size = 0;
                check(ecsp_index_language(idx.get(), i, &name, &size));
                std::cout << name << '\t' << size << '\n';
            }
        } else if (*retrieve) {
            auto ds = load_dataset(retrieve_args.annotations, retrieve_args.format);
            auto emb = load_embeddings(retrieve_args.embeddings);
            Index idx;
            if (!retrieve_index.empty()) {
                ecsp_index* raw = nullptr;
                check(ecsp_index_load(retrieve_index.c_str(), &raw));
                idx.reset(raw);
            } else {
                idx = build_index(ds.get(), emb.get(), retrieve_normalize_parts);
            }
            retrieve_opts.exclude_self = no_exclude_self ? 0 : 1;
            retrieve_opts.split = retrieve_split.c_str();
            std::size_t written = 0;
            check(ecsp_retrieve_to_file(idx.get(), ds.get(), emb.get(), &retrieve_opts, retrieve_out.c_str(), &written));
            std::cerr << "wrote " << written << " outcomes\n";
        } else if (*prompt) {
            auto ds = load_dataset(prompt_args.annotations, prompt_args.format);
            ecsp_prompt_options opts;
            ecsp_prompt_options_init(&opts);
            opts.variant = prompt_variant.c_str();
            opts.max_tokens = prompt_max_tokens;
            opts.duplicate_utterance = duplicate_utterance ? 1 : 0;
            opts.split = prompt_split.c_str();
            std::size_t written = 0;
            check(ecsp_prompts_to_file(ds.get(), prompt_retrieval.empty() ? nullptr : prompt_retrieval.c_str(), &opts,
                                       prompt_out.c_str(), &written));
            std::cerr << "wrote " << written << " prompts\n";
        } else if (*plan) {
            auto ds = load_dataset(plan_args.annotations, plan_args.format);
            const auto [w, h] = parse_size(plan_target);
            plan_opts.target_width = w;
            plan_opts.target_height = h;
            plan_opts.split = plan_split.c_str();
            std::size_t written = 0;
            check(ecsp_tta_plans_to_file(ds.get(), &plan_opts, plan_out.c_str(), &written));
            std::cerr << "wrote " << written << " plans\n";
        } else if (*fuse) {
            std::vector<const char*> paths;
            for (const auto& p : fuse_probs) paths.push_back(p.c_str());
            std::size_t written = 0;
            check(ecsp_fuse_files(paths.data(), paths.size(), fuse_ensemble.empty() ? nullptr : fuse_ensemble.c_str(),
                                  fuse_no_tta ? 0 : 1, fuse_out.c_str(), &written));
            std::cerr << "wrote " << written << " predictions\n";
        } else if (*score) {
            auto ds = load_dataset(score_args.annotations, score_args.format);
            ecsp_score_options opts;
            ecsp_score_options_init(&opts);
            opts.average = score_average.c_str();
            opts.by_language = by_language ? 1 : 0;
            opts.method = score_method.c_str();
            opts.scores_json_path = score_json.empty() ? nullptr : score_json.c_str();
            char* table = nullptr;
            check(ecsp_score_file(score_predictions.c_str(), ds.get(), &opts, &table));
            OwnedString owned(table);
            std::cout << owned.get();
        } else if (*run) {
            std::vector<std::pair<std::string, std::string>> settings;
            for (const auto& s : run_sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) usage_error("--set expects key=value, got '" + s + "'");
                settings.emplace_back(s.substr(0, eq), s.substr(eq + 1));
            }
            if (run_eta) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", *run_eta);
                settings.emplace_back("eta", buf);
            }
            if (run_k) settings.emplace_back("k", std::to_string(*run_k));
            if (run_seed) settings.emplace_back("seed", std::to_string(*run_seed));
            if (!run_output_dir.empty()) settings.emplace_back("output_dir", run_output_dir);
            if (!run_remote.empty()) settings.emplace_back("remote", run_remote);
            std::vector<ecsp_setting> raw;
            for (const auto& [k, v] : settings) raw.push_back({k.c_str(), v.c_str()});
            char* summary = nullptr;
            check(ecsp_run(run_config.c_str(), raw.data(), raw.size(), &summary));
            OwnedString owned(summary);
            std::cout << owned.get();
        }
    } catch (const CliFailure& f) {
        const nlohmann::json line = {{"error", ecsp_status_name(f.status)}, {"code", static_cast<int>(f.status)},
                                     {"message", f.message}};
        std::cerr << line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        return 1;
    }
    return 0;
}
