// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/ecsp.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "ecsp/pipeline.hpp"
#include "io_util.hpp"

struct ecsp_dataset {
    std::vector<ecsp::AnnotationRecord> records;
};

struct ecsp_embeddings {
    std::vector<ecsp::JointEmbedding> items;
};

struct ecsp_index {
    ecsp::RetrievalIndex index;
    std::vector<std::string> language_names;
};

namespace {

thread_local std::string g_last_error;

ecsp_status to_status(ecsp::ErrorCode code) { return static_cast<ecsp_status>(static_cast<int>(code)); }

ecsp_status set_error(ecsp_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
ecsp_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        return ECSP_OK;
    } catch (const ecsp::Error& e) {
        return set_error(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(ECSP_ERR_INTERNAL, "out of memory");
    } catch (const std::filesystem::filesystem_error& e) {
        return set_error(ECSP_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return set_error(ECSP_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(ECSP_ERR_INTERNAL, "unknown error");
    }
}

void require(bool ok, const char* what) {
    if (!ok) ecsp::fail(ecsp::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::optional<ecsp::Split> split_or_all(const char* split) {
    return split ? ecsp::split_selector(split) : std::nullopt;
}

ecsp::AnnotationFormat resolve_format(ecsp_annotation_format f, const char* path) {
    switch (f) {
        case ECSP_FORMAT_JSONL: return ecsp::AnnotationFormat::Jsonl;
        case ECSP_FORMAT_CSV: return ecsp::AnnotationFormat::Csv;
        case ECSP_FORMAT_AUTO: break;
    }
    return ecsp::annotation_format_for(path);
}

}  // namespace

extern "C" {

const char* ecsp_version(void) { return "1.0.0"; }

const char* ecsp_status_name(ecsp_status status) {
    static thread_local std::string name;
    name = std::string(ecsp::error_code_name(static_cast<ecsp::ErrorCode>(status)));
    return name.c_str();
}

const char* ecsp_last_error(void) { return g_last_error.c_str(); }

void ecsp_string_free(char* s) { std::free(s); }

size_t ecsp_emotion_count(void) { return ecsp::kNumEmotions; }

const char* ecsp_emotion_name(size_t index) {
    // kEmotionNames views point at string literals, so they are NUL-terminated.
    return index < ecsp::kNumEmotions ? ecsp::kEmotionNames[index].data() : nullptr;
}

ecsp_status ecsp_emotion_from_name(const char* name, size_t* index) {
    return guarded([&] {
        require(name && index, "ecsp_emotion_from_name: null argument");
        *index = ecsp::emotion_from_name(name).index();
    });
}

ecsp_status ecsp_cosine_similarity(const double* a, const double* b, size_t dim, double* out) {
    return guarded([&] {
        require(a && b && out, "ecsp_cosine_similarity: null argument");
        *out = ecsp::cosine_similarity(std::span<const double>(a, dim), std::span<const double>(b, dim));
    });
}

ecsp_status ecsp_dataset_load(const char* path, ecsp_annotation_format format, ecsp_dataset** out) {
    return guarded([&] {
        require(path && out, "ecsp_dataset_load: null argument");
        auto ds = std::make_unique<ecsp_dataset>();
        ds->records = ecsp::load_annotations(path, resolve_format(format, path));
        *out = ds.release();
    });
}

void ecsp_dataset_free(ecsp_dataset* dataset) { delete dataset; }

size_t ecsp_dataset_size(const ecsp_dataset* dataset) { return dataset ? dataset->records.size() : 0; }

ecsp_status ecsp_dataset_write_jsonl(const ecsp_dataset* dataset, const char* path) {
    return guarded([&] {
        require(dataset && path, "ecsp_dataset_write_jsonl: null argument");
        ecsp::write_annotations_jsonl(dataset->records, path);
    });
}

ecsp_status ecsp_embeddings_load(const char* path, ecsp_embeddings** out) {
    return guarded([&] {
        require(path && out, "ecsp_embeddings_load: null argument");
        auto e = std::make_unique<ecsp_embeddings>();
        e->items = ecsp::load_embeddings(path);
        *out = e.release();
    });
}

void ecsp_embeddings_free(ecsp_embeddings* embeddings) { delete embeddings; }

size_t ecsp_embeddings_count(const ecsp_embeddings* embeddings) { return embeddings ? embeddings->items.size() : 0; }

ecsp_status ecsp_embeddings_dims(const ecsp_embeddings* embeddings, size_t* image_dim, size_t* text_dim) {
    return guarded([&] {
        require(embeddings && image_dim && text_dim, "ecsp_embeddings_dims: null argument");
        require(!embeddings->items.empty(), "ecsp_embeddings_dims: no embeddings loaded");
        *image_dim = embeddings->items.front().image_dim();
        *text_dim = embeddings->items.front().text_dim();
    });
}

ecsp_status ecsp_embeddings_write_binary(const ecsp_embeddings* embeddings, const char* path, uint64_t* bytes) {
    return guarded([&] {
        require(embeddings && path, "ecsp_embeddings_write_binary: null argument");
        const auto n = ecsp::write_embeddings_binary(embeddings->items, path);
        if (bytes) *bytes = n;
    });
}

ecsp_status ecsp_embeddings_write_jsonl(const ecsp_embeddings* embeddings, const char* path) {
    return guarded([&] {
        require(embeddings && path, "ecsp_embeddings_write_jsonl: null argument");
        ecsp::write_embeddings_jsonl(embeddings->items, path);
    });
}

ecsp_status ecsp_validate(const ecsp_dataset* dataset, const ecsp_embeddings* embeddings) {
    return guarded([&] {
        require(dataset && embeddings, "ecsp_validate: null argument");
        (void)ecsp::make_manifest(dataset->records, embeddings->items);
    });
}

namespace {

void fill_language_names(ecsp_index& idx) {
    idx.language_names.clear();
    for (const auto& [tag, li] : idx.index.languages()) idx.language_names.push_back(tag.value());
}

}  // namespace

ecsp_status ecsp_index_build(const ecsp_dataset* dataset, const ecsp_embeddings* embeddings, int normalize_parts,
                             ecsp_index** out) {
    return guarded([&] {
        require(dataset && embeddings && out, "ecsp_index_build: null argument");
        auto idx = std::make_unique<ecsp_index>();
        idx->index = ecsp::build_pool_index(dataset->records, embeddings->items,
                                            ecsp::IndexOptions{normalize_parts != 0});
        fill_language_names(*idx);
        *out = idx.release();
    });
}

ecsp_status ecsp_index_load(const char* path, ecsp_index** out) {
    return guarded([&] {
        require(path && out, "ecsp_index_load: null argument");
        auto idx = std::make_unique<ecsp_index>();
        idx->index = ecsp::RetrievalIndex::load(path);
        fill_language_names(*idx);
        *out = idx.release();
    });
}

ecsp_status ecsp_index_save(const ecsp_index* index, const char* path) {
    return guarded([&] {
        require(index && path, "ecsp_index_save: null argument");
        index->index.save(path);
    });
}

void ecsp_index_free(ecsp_index* index) { delete index; }

size_t ecsp_index_language_count(const ecsp_index* index) { return index ? index->language_names.size() : 0; }

ecsp_status ecsp_index_language(const ecsp_index* index, size_t i, const char** name, size_t* size) {
    return guarded([&] {
        require(index && name && size, "ecsp_index_language: null argument");
        require(i < index->language_names.size(), "ecsp_index_language: index out of range");
        const auto& lang = index->language_names[i];
        *name = lang.c_str();
        *size = index->index.find(ecsp::LanguageTag::parse(lang))->size();
    });
}

ecsp_status ecsp_retrieve_one(const ecsp_index* index, const char* query_id, const char* language, const float* joint,
                              size_t dim, size_t k, double eta, const char* exclude_id, char** outcome_json) {
    return guarded([&] {
        require(index && query_id && language && joint && outcome_json, "ecsp_retrieve_one: null argument");
        std::optional<std::string_view> exclude;
        if (exclude_id) exclude = exclude_id;
        const auto outcome = ecsp::retrieve(query_id, std::span<const float>(joint, dim),
                                            ecsp::LanguageTag::parse(language), index->index, {k, eta}, exclude);
        *outcome_json = dup_string(ecsp::outcome_to_json_line(outcome));
    });
}

void ecsp_retrieve_options_init(ecsp_retrieve_options* options) {
    if (!options) return;
    options->k = ecsp::kDefaultK;
    options->eta = ecsp::kDefaultEta;
    options->exclude_self = 1;
    options->split = "all";
}

ecsp_status ecsp_retrieve_to_file(const ecsp_index* index, const ecsp_dataset* dataset, const ecsp_embeddings* embeddings,
                                  const ecsp_retrieve_options* options, const char* out_path, size_t* written) {
    return guarded([&] {
        require(index && dataset && embeddings && options && out_path, "ecsp_retrieve_to_file: null argument");
        const auto outcomes = ecsp::retrieve_records(index->index, dataset->records, embeddings->items,
                                                     split_or_all(options->split), {options->k, options->eta},
                                                     options->exclude_self != 0);
        ecsp::write_outcomes_jsonl(outcomes, out_path);
        if (written) *written = outcomes.size();
    });
}

void ecsp_prompt_options_init(ecsp_prompt_options* options) {
    if (!options) return;
    options->variant = "ecsp";
    options->max_tokens = 0;
    options->duplicate_utterance = 0;
    options->split = "all";
}

ecsp_status ecsp_prompts_to_file(const ecsp_dataset* dataset, const char* retrieval_path,
                                 const ecsp_prompt_options* options, const char* out_path, size_t* written) {
    return guarded([&] {
        require(dataset && options && out_path, "ecsp_prompts_to_file: null argument");
        std::vector<ecsp::RetrievalOutcome> outcomes;
        if (retrieval_path) outcomes = ecsp::load_outcomes_jsonl(retrieval_path);
        ecsp::PromptStageOptions opts;
        opts.variant = ecsp::variant_from_name(options->variant ? options->variant : "ecsp");
        opts.max_tokens = options->max_tokens;
        opts.render.duplicate_utterance = options->duplicate_utterance != 0;
        const auto prompts = ecsp::render_records(dataset->records, outcomes, split_or_all(options->split), opts);
        ecsp::write_prompts_jsonl(prompts, out_path);
        if (written) *written = prompts.size();
    });
}

void ecsp_tta_options_init(ecsp_tta_options* options) {
    if (!options) return;
    options->crop_fraction = ecsp::kDefaultCropFraction;
    options->seed = 0;
    options->target_width = ecsp::kDefaultTargetSize.width;
    options->target_height = ecsp::kDefaultTargetSize.height;
    options->split = "all";
}

ecsp_status ecsp_tta_plans_to_file(const ecsp_dataset* dataset, const ecsp_tta_options* options, const char* out_path,
                                   size_t* written) {
    return guarded([&] {
        require(dataset && options && out_path, "ecsp_tta_plans_to_file: null argument");
        const auto plans = ecsp::plan_records(dataset->records, split_or_all(options->split),
                                              {options->target_width, options->target_height}, options->crop_fraction,
                                              options->seed);
        ecsp::write_plans_jsonl(plans, out_path);
        if (written) *written = plans.size();
    });
}

ecsp_status ecsp_fuse_files(const char* const* probability_paths, size_t count, const char* ensemble_config_path,
                            int tta, const char* out_path, size_t* written) {
    return guarded([&] {
        require((probability_paths || count == 0) && out_path, "ecsp_fuse_files: null argument");
        std::vector<std::filesystem::path> paths;
        for (size_t i = 0; i < count; ++i) {
            require(probability_paths[i] != nullptr, "ecsp_fuse_files: null probability path");
            paths.emplace_back(probability_paths[i]);
        }
        std::optional<ecsp::EnsembleConfig> config;
        if (ensemble_config_path) config = ecsp::EnsembleConfig::load(ensemble_config_path);
        const auto predictions = ecsp::fuse_files(paths, config, tta != 0);
        ecsp::write_predictions_jsonl(predictions, out_path);
        if (written) *written = predictions.size();
    });
}

void ecsp_score_options_init(ecsp_score_options* options) {
    if (!options) return;
    options->average = "macro";
    options->by_language = 0;
    options->method = "ensemble";
    options->scores_json_path = nullptr;
}

ecsp_status ecsp_score_file(const char* predictions_path, const ecsp_dataset* dataset,
                            const ecsp_score_options* options, char** table) {
    return guarded([&] {
        require(predictions_path && dataset && options && table, "ecsp_score_file: null argument");
        const auto predictions = ecsp::load_predictions_jsonl(predictions_path);
        const std::string method = options->method ? options->method : "ensemble";
        const auto result = ecsp::score_predictions(predictions, dataset->records,
                                                    ecsp::average_from_name(options->average ? options->average : "macro"),
                                                    options->by_language != 0, method);
        if (options->scores_json_path) {
            const std::filesystem::path path(options->scores_json_path);
            auto out = ecsp::detail::open_out(path);
            out << ecsp::scores_to_json(method, result.overall) << '\n';
            ecsp::detail::close_out(out, path);
        }
        *table = dup_string(result.table);
    });
}

ecsp_status ecsp_run(const char* config_path, const ecsp_setting* overrides, size_t override_count, char** summary) {
    return guarded([&] {
        require(config_path && (overrides || override_count == 0), "ecsp_run: null argument");
        auto config = ecsp::RunConfig::load(config_path);
        for (size_t i = 0; i < override_count; ++i) {
            require(overrides[i].key && overrides[i].value, "ecsp_run: null override");
            config.set(overrides[i].key, overrides[i].value);
        }
        const auto result = ecsp::run_pipeline(config);
        if (summary) *summary = dup_string(result.table);
    });
}

}  // extern "C"
