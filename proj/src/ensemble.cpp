// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/ensemble.hpp"

#include <charconv>
#include <cmath>

#include "io_util.hpp"
#include "text_util.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

}  // namespace

EnsembleConfig EnsembleConfig::from_weights(const std::map<std::string, double>& weights) {
    double total = 0.0;
    for (const auto& [id, w] : weights) {
        if (id.empty()) fail(ErrorCode::InvalidArgument, "ensemble: empty backend id");
        if (!std::isfinite(w) || w < 0.0) {
            fail(ErrorCode::InvalidArgument, "ensemble: weight for '" + id + "' must be a finite non-negative number");
        }
        total += w;
    }
    if (!(total > 0.0)) fail(ErrorCode::InvalidArgument, "ensemble: at least one weight must be positive");
    EnsembleConfig cfg;
    for (const auto& [id, w] : weights) cfg.m_weights.emplace(id, w / total);
    return cfg;
}

EnsembleConfig EnsembleConfig::equal(std::span<const std::string> backend_ids) {
    std::map<std::string, double> weights;
    for (const auto& id : backend_ids) weights[id] = 1.0;
    return from_weights(weights);
}

EnsembleConfig EnsembleConfig::load(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::map<std::string, double> weights;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = std::string_view(line);
        body = detail::trim(body.substr(0, body.find('#')));
        if (body.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(line_no);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) fail(ErrorCode::Parse, where + ": expected 'backend_id = weight'");
        const auto key = std::string(detail::trim(body.substr(0, eq)));
        const auto value = detail::trim(body.substr(eq + 1));
        double w = 0.0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), w);
        if (key.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
            fail(ErrorCode::Parse, where + ": expected 'backend_id = weight'");
        }
        if (!weights.emplace(key, w).second) fail(ErrorCode::Parse, where + ": duplicate backend '" + key + "'");
    }
    return from_weights(weights);
}

Prediction fuse(std::string_view sample_id, const std::map<std::string, ProbabilityVector>& per_backend,
                const EnsembleConfig& config) {
    Prediction p;
    p.sample_id = std::string(sample_id);
    p.fused_probs.fill(0.0);
    // Map order fixes the accumulation order, so callers' iteration order never matters.
    for (const auto& [backend, weight] : config.weights()) {
        auto it = per_backend.find(backend);
        if (it == per_backend.end()) {
            fail(ErrorCode::MissingBackend, "sample '" + p.sample_id + "': missing backend '" + backend + "'");
        }
        if (!on_simplex(it->second.probs)) {
            fail(ErrorCode::InvalidVector, "sample '" + p.sample_id + "': backend '" + backend +
                                               "' vector is not a probability vector");
        }
        for (std::size_t c = 0; c < kNumEmotions; ++c) p.fused_probs[c] += weight * it->second.probs[c];
        p.contributing_backends.push_back(backend);
    }
    p.predicted = argmax(p.fused_probs);
    return p;
}

std::vector<Prediction> fuse_batch(std::span<const ProbabilityVector> rows, const EnsembleConfig& config) {
    std::map<std::string, std::map<std::string, ProbabilityVector>> grouped;
    for (const auto& row : rows) {
        auto& slot = grouped[row.sample_id];
        if (!slot.emplace(row.backend_id, row).second) {
            fail(ErrorCode::DuplicateVariant, "sample '" + row.sample_id + "': more than one vector for backend '" +
                                                  row.backend_id + "'");
        }
    }
    std::vector<Prediction> out;
    out.reserve(grouped.size());
    for (const auto& [sample, per_backend] : grouped) out.push_back(fuse(sample, per_backend, config));
    return out;
}

std::string prediction_to_json_line(const Prediction& p) {
    json obj = json::object();
    obj["sample_id"] = p.sample_id;
    obj["probs"] = p.fused_probs;
    obj["predicted"] = std::string(p.predicted.name());
    obj["backends"] = p.contributing_backends;
    return detail::dump_line(obj);
}

namespace {

Prediction prediction_from_json(const json& obj) {
    Prediction p;
    p.sample_id = obj.at("sample_id").get<std::string>();
    const auto& probs = obj.at("probs");
    if (!probs.is_array() || probs.size() != kNumEmotions) {
        fail(ErrorCode::Parse, "prediction '" + p.sample_id + "': probs must have 9 entries");
    }
    for (std::size_t c = 0; c < kNumEmotions; ++c) p.fused_probs[c] = probs[c].get<double>();
    const auto& predicted = obj.at("predicted");
    p.predicted = predicted.is_number_unsigned() ? EmotionClass::from_index(predicted.get<std::size_t>())
                                                 : emotion_from_name(predicted.get<std::string>());
    if (auto it = obj.find("backends"); it != obj.end()) p.contributing_backends = it->get<std::vector<std::string>>();
    return p;
}

}  // namespace

Prediction prediction_from_json_line(std::string_view line) {
    try {
        return prediction_from_json(json::parse(line));
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("prediction: ") + e.what());
    }
}

void write_predictions_jsonl(std::span<const Prediction> predictions, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& p : predictions) out << prediction_to_json_line(p) << '\n';
    detail::close_out(out, path);
}

std::vector<Prediction> load_predictions_jsonl(const std::filesystem::path& path) {
    std::vector<Prediction> out;
    detail::for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(prediction_from_json(obj)); });
    return out;
}

}  // namespace ecsp
