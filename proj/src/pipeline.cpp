// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/pipeline.hpp"

#include <charconv>
#include <map>
#include <set>
#include <unordered_map>

#include "io_util.hpp"
#include "logging.hpp"
#include "text_util.hpp"

namespace ecsp {

namespace {

std::unordered_map<std::string_view, const JointEmbedding*> embeddings_by_id(std::span<const JointEmbedding> embeddings) {
    std::unordered_map<std::string_view, const JointEmbedding*> by_id;
    for (const auto& e : embeddings) by_id.emplace(e.id(), &e);
    return by_id;
}

template <typename T>
T parse_number(std::string_view text, const std::string& key) {
    text = detail::trim(text);
    T v{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        fail(ErrorCode::InvalidArgument, "config: '" + key + "' expects a number, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view text, const std::string& key) {
    const auto v = detail::to_lower(detail::trim(text));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::InvalidArgument, "config: '" + key + "' expects a boolean, got '" + std::string(text) + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    return p.is_absolute() || base.empty() ? p : base / p;
}

BackendDescriptor& backend_slot(std::vector<BackendDescriptor>& backends, const std::string& id) {
    for (auto& b : backends) {
        if (b.backend_id == id) return b;
    }
    BackendDescriptor d;
    d.backend_id = id;
    backends.push_back(std::move(d));
    return backends.back();
}

}  // namespace

std::optional<Split> split_selector(std::string_view name) {
    if (detail::to_lower(detail::trim(name)) == "all") return std::nullopt;
    return split_from_name(name);
}

bool selected(const AnnotationRecord& record, std::optional<Split> split) noexcept {
    return !split || record.split == *split;
}

ImageSize parse_image_size(std::string_view text) {
    const auto x = text.find_first_of("xX");
    if (x == std::string_view::npos) fail(ErrorCode::InvalidArgument, "image size must look like WxH: '" + std::string(text) + "'");
    const auto w = parse_number<std::uint32_t>(text.substr(0, x), "size");
    const auto h = parse_number<std::uint32_t>(text.substr(x + 1), "size");
    if (w == 0 || h == 0) fail(ErrorCode::InvalidSize, "image size must be at least 1x1");
    return {w, h};
}

RetrievalIndex build_pool_index(std::span<const AnnotationRecord> records, std::span<const JointEmbedding> embeddings,
                                IndexOptions options) {
    const auto pool = train_pool(records, embeddings);
    auto index = RetrievalIndex::build(pool, options);
    for (const auto& [tag, li] : index.languages()) log::get().info("index {}: {} entries", tag.value(), li.size());
    return index;
}

std::vector<RetrievalOutcome> retrieve_records(const RetrievalIndex& index, std::span<const AnnotationRecord> records,
                                               std::span<const JointEmbedding> embeddings, std::optional<Split> split,
                                               RetrieveParams params, bool exclude_self) {
    const auto by_id = embeddings_by_id(embeddings);
    std::vector<RetrievalQuery> queries;
    for (const auto& r : records) {
        if (!selected(r, split)) continue;
        auto it = by_id.find(r.id);
        if (it == by_id.end()) fail(ErrorCode::Validation, "id: record '" + r.id + "' has no embedding");
        queries.push_back({&r, it->second});
    }
    return retrieve_batch(queries, index, params, exclude_self);
}

std::vector<PromptArtifact> render_records(std::span<const AnnotationRecord> records,
                                           std::span<const RetrievalOutcome> outcomes, std::optional<Split> split,
                                           const PromptStageOptions& options) {
    std::unordered_map<std::string_view, const RetrievalOutcome*> by_query;
    for (const auto& o : outcomes) by_query.emplace(o.query_id, &o);
    std::vector<PromptArtifact> out;
    for (const auto& r : records) {
        if (!selected(r, split)) continue;
        auto it = by_query.find(r.id);
        const RetrievalOutcome* outcome = it == by_query.end() ? nullptr : it->second;
        auto artifact = render(options.variant, r, outcome, options.render);
        if (options.max_tokens > 0) truncate_artifact(artifact, options.max_tokens);
        out.push_back(std::move(artifact));
    }
    return out;
}

std::vector<TtaPlan> plan_records(std::span<const AnnotationRecord> records, std::optional<Split> split,
                                  ImageSize target, double crop_fraction, std::uint64_t seed) {
    std::vector<TtaPlan> out;
    for (const auto& r : records) {
        if (!selected(r, split)) continue;
        ImageSize source = target;
        if (r.image_width && r.image_height) source = {*r.image_width, *r.image_height};
        out.push_back(make_plan(r.id, source, target, crop_fraction, seed));
    }
    return out;
}

std::vector<ProbabilityVector> collapse_variants(std::span<const ProbabilityVector> rows, bool tta) {
    std::map<std::pair<std::string, std::string>, std::vector<ProbabilityVector>> groups;
    for (const auto& row : rows) groups[{row.sample_id, row.backend_id}].push_back(row);

    std::vector<ProbabilityVector> out;
    out.reserve(groups.size());
    for (auto& [key, group] : groups) {
        if (tta) {
            out.push_back(aggregate_tta(group));
            continue;
        }
        if (group.size() == 1) {
            out.push_back(std::move(group.front()));
            continue;
        }
        const auto identity = std::find_if(group.begin(), group.end(), [](const ProbabilityVector& v) {
            return v.variant_id == tta_kind_name(TtaKind::Identity);
        });
        if (identity == group.end()) {
            fail(ErrorCode::InvalidArgument, "sample '" + key.first + "', backend '" + key.second +
                                                 "': several variants, no identity row, and TTA is off");
        }
        out.push_back(std::move(*identity));
    }
    return out;
}

std::vector<Prediction> fuse_files(std::span<const std::filesystem::path> probability_files,
                                   const std::optional<EnsembleConfig>& config, bool tta) {
    std::vector<ProbabilityVector> rows;
    for (const auto& path : probability_files) {
        auto loaded = load_backend_outputs(path);
        rows.insert(rows.end(), std::make_move_iterator(loaded.begin()), std::make_move_iterator(loaded.end()));
    }
    const auto collapsed = collapse_variants(rows, tta);
    if (config) return fuse_batch(collapsed, *config);
    if (collapsed.empty()) return {};
    std::set<std::string> backends;
    for (const auto& v : collapsed) backends.insert(v.backend_id);
    const std::vector<std::string> ids(backends.begin(), backends.end());
    return fuse_batch(collapsed, EnsembleConfig::equal(ids));
}

ScoreResult score_predictions(std::span<const Prediction> predictions, std::span<const AnnotationRecord> records,
                              Average average, bool by_language, const std::string& method) {
    std::unordered_map<std::string_view, const AnnotationRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    std::vector<LabelPair> all;
    std::map<std::string, std::vector<LabelPair>> per_language;
    for (const auto& p : predictions) {
        auto it = by_id.find(p.sample_id);
        if (it == by_id.end()) fail(ErrorCode::Validation, "id: prediction for unknown sample '" + p.sample_id + "'");
        const auto& rec = *it->second;
        if (!rec.gold_emotion) fail(ErrorCode::Validation, "gold_emotion: sample '" + p.sample_id + "' has no gold label");
        const LabelPair pair{*rec.gold_emotion, p.predicted};
        all.push_back(pair);
        per_language[rec.language.value()].push_back(pair);
    }

    ScoreResult result;
    result.overall = score(all);
    result.rows.push_back({method, result.overall});
    if (by_language) {
        for (const auto& [lang, pairs] : per_language) result.rows.push_back({method + " [" + lang + "]", score(pairs)});
    }
    result.table = report(result.rows, average);
    return result;
}

void RunConfig::set(const std::string& key, const std::string& raw, const std::filesystem::path& base_dir) {
    const std::string value(detail::trim(raw));
    if (key == "annotations") {
        annotations = resolve(base_dir, value);
    } else if (key == "annotations_format") {
        const auto v = detail::to_lower(value);
        if (v != "jsonl" && v != "csv") fail(ErrorCode::InvalidArgument, "config: annotations_format must be jsonl or csv");
        annotations_format = v == "csv" ? AnnotationFormat::Csv : AnnotationFormat::Jsonl;
    } else if (key == "embeddings") {
        embeddings = resolve(base_dir, value);
    } else if (key == "output_dir") {
        output_dir = resolve(base_dir, value);
    } else if (key == "eta") {
        eta = parse_number<double>(value, key);
    } else if (key == "k") {
        k = parse_number<std::size_t>(value, key);
        if (k == 0) fail(ErrorCode::InvalidArgument, "config: k must be at least 1");
    } else if (key == "exclude_self") {
        exclude_self = parse_bool(value, key);
    } else if (key == "normalize_parts") {
        normalize_parts = parse_bool(value, key);
    } else if (key == "prompt_variant") {
        prompt_variant = variant_from_name(value);
    } else if (key == "duplicate_utterance") {
        duplicate_utterance = parse_bool(value, key);
    } else if (key == "query_split") {
        query_split = split_selector(value);
    } else if (key == "tta") {
        tta = parse_bool(value, key);
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "crop_fraction") {
        crop_fraction = parse_number<double>(value, key);
    } else if (key == "target") {
        target = parse_image_size(value);
    } else if (key == "ensemble") {
        if (value.empty()) {
            ensemble.reset();
        } else {
            ensemble = resolve(base_dir, value);
        }
    } else if (key == "method") {
        method = value;
    } else if (key == "average") {
        average = average_from_name(value);
    } else if (key == "max_in_flight") {
        max_in_flight = parse_number<unsigned>(value, key);
    } else if (key == "remote") {
        // Routes every configured backend to one live server.
        for (auto& b : backends) {
            b.mode = BackendMode::Remote;
            b.location = value;
        }
    } else if (key.starts_with("backend.")) {
        const auto rest = std::string_view(key).substr(8);
        const auto dot = rest.rfind('.');
        if (dot == std::string_view::npos || dot == 0) fail(ErrorCode::InvalidArgument, "config: bad backend key '" + key + "'");
        auto& b = backend_slot(backends, std::string(rest.substr(0, dot)));
        const auto field = rest.substr(dot + 1);
        if (field == "mode") {
            b.mode = backend_mode_from_name(value);
        } else if (field == "location") {
            // URLs stay as written; anything else is a path.
            b.location = value.find("://") != std::string::npos ? value : resolve(base_dir, value).string();
        } else if (field == "max_tokens") {
            b.max_tokens = parse_number<std::size_t>(value, key);
            if (b.max_tokens == 0) fail(ErrorCode::InvalidArgument, "config: max_tokens must be at least 1");
        } else if (field == "expects_image") {
            b.expects_image = parse_bool(value, key);
        } else if (field == "timeout_ms") {
            b.retry.timeout = std::chrono::milliseconds(parse_number<long>(value, key));
        } else {
            fail(ErrorCode::InvalidArgument, "config: unknown backend field '" + std::string(field) + "'");
        }
    } else {
        fail(ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
    }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    RunConfig cfg;
    const auto base = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = std::string_view(line);
        body = detail::trim(body.substr(0, body.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) fail(ErrorCode::Parse, where + ": expected 'key = value'");
        try {
            cfg.set(std::string(detail::trim(body.substr(0, eq))), std::string(body.substr(eq + 1)), base);
        } catch (const Error& e) {
            fail(ErrorCode::Parse, where + ": " + e.what());
        }
    }
    return cfg;
}

RunSummary run_pipeline(const RunConfig& config) {
    if (config.annotations.empty() || config.embeddings.empty()) {
        fail(ErrorCode::InvalidArgument, "run: annotations and embeddings paths are required");
    }
    if (config.backends.empty()) fail(ErrorCode::InvalidArgument, "run: no backends configured");
    const auto& out_dir = config.output_dir;
    std::filesystem::create_directories(out_dir);

    // ingest
    const auto format = config.annotations_format.value_or(annotation_format_for(config.annotations));
    auto records = load_annotations(config.annotations, format);
    const auto embeddings = load_embeddings(config.embeddings);
    const auto manifest = make_manifest(std::move(records), embeddings);
    const auto& recs = manifest.records;
    write_embeddings_binary(embeddings, out_dir / "embeddings.bin");

    // index
    const auto index = build_pool_index(recs, embeddings, IndexOptions{config.normalize_parts});
    index.save(out_dir / "index.bin");

    // retrieve + prompt
    const auto outcomes =
        retrieve_records(index, recs, embeddings, config.query_split, {config.k, config.eta}, config.exclude_self);
    write_outcomes_jsonl(outcomes, out_dir / "retrieval.jsonl");
    PromptStageOptions prompt_options;
    prompt_options.variant = config.prompt_variant;
    prompt_options.render.duplicate_utterance = config.duplicate_utterance;
    const auto prompts = render_records(recs, outcomes, config.query_split, prompt_options);
    write_prompts_jsonl(prompts, out_dir / "prompts.jsonl");

    // tta plans
    const auto plans = plan_records(recs, config.query_split, config.target, config.crop_fraction, config.seed);
    write_plans_jsonl(plans, out_dir / "tta_plans.jsonl");

    // backends
    std::vector<std::filesystem::path> probability_files;
    std::unordered_map<std::string_view, const AnnotationRecord*> by_id;
    for (const auto& r : recs) by_id.emplace(r.id, &r);
    for (const auto& backend : config.backends) {
        if (backend.mode == BackendMode::File) {
            probability_files.emplace_back(backend.location);
            continue;
        }
        std::vector<PredictionRequest> requests;
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            const auto& rec = *by_id.at(prompts[i].sample_id);
            std::optional<std::string> image_ref;
            if (backend.expects_image) image_ref = rec.image_ref;
            if (config.tta && backend.expects_image) {
                for (const auto& v : plans[i].variants) requests.push_back({prompts[i], v, image_ref});
            } else {
                requests.push_back({prompts[i], std::nullopt, image_ref});
            }
        }
        log::get().info("backend {}: {} requests to {}", backend.backend_id, requests.size(), backend.location);
        const auto vectors = request_batch(backend, requests, config.max_in_flight);
        const auto path = out_dir / ("probs_" + backend.backend_id + ".jsonl");
        write_backend_outputs(vectors, path);
        probability_files.push_back(path);
    }

    // fuse
    std::optional<EnsembleConfig> ensemble;
    if (config.ensemble) {
        ensemble = EnsembleConfig::load(*config.ensemble);
    } else {
        std::vector<std::string> ids;
        for (const auto& b : config.backends) ids.push_back(b.backend_id);
        ensemble = EnsembleConfig::equal(ids);
    }
    const auto predictions = fuse_files(probability_files, ensemble, config.tta);
    RunSummary summary;
    summary.predictions_path = out_dir / "predictions.jsonl";
    summary.predictions = predictions.size();
    write_predictions_jsonl(predictions, summary.predictions_path);

    // score, when every prediction has a gold label
    const bool scorable = !predictions.empty() && std::all_of(predictions.begin(), predictions.end(), [&](const Prediction& p) {
        auto it = by_id.find(p.sample_id);
        return it != by_id.end() && it->second->gold_emotion.has_value();
    });
    if (scorable) {
        const auto result = score_predictions(predictions, recs, config.average, false, config.method);
        summary.scores = result.overall;
        summary.table = result.table;
        auto out = detail::open_out(out_dir / "scores.json");
        out << scores_to_json(config.method, result.overall) << '\n';
        detail::close_out(out, out_dir / "scores.json");
        auto rep = detail::open_out(out_dir / "report.txt");
        rep << result.table;
        detail::close_out(rep, out_dir / "report.txt");
    } else {
        log::get().warn("run: predictions lack gold labels; scoring skipped");
    }
    return summary;
}

}  // namespace ecsp
