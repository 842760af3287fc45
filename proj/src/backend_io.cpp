// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/backend_io.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "io_util.hpp"
#include "text_util.hpp"
#include "logging.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

std::string line_where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::optional<Probs> probs_from_json(const json& value) {
    if (!value.is_array() || value.size() != kNumEmotions) return std::nullopt;
    Probs p{};
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
        if (!value[c].is_number()) return std::nullopt;
        p[c] = value[c].get<double>();
    }
    return p;
}

httplib::Client make_client(const BackendDescriptor& d) {
    httplib::Client client(d.location);
    const auto timeout = d.retry.timeout;
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    return client;
}

}  // namespace

std::string_view backend_mode_name(BackendMode m) noexcept { return m == BackendMode::Remote ? "remote" : "file"; }

BackendMode backend_mode_from_name(std::string_view name) {
    if (name == "file") return BackendMode::File;
    if (name == "remote") return BackendMode::Remote;
    fail(ErrorCode::InvalidArgument, "unknown backend mode '" + std::string(name) + "'");
}

namespace {

constexpr double kRenormalizeSlack = 1e-12;

}  // namespace

Probs validate_probs(const Probs& raw, std::string_view where) {
    double sum = 0.0;
    for (double p : raw) {
        if (!std::isfinite(p) || p < 0.0) {
            fail(ErrorCode::NotOnSimplex, std::string(where) + ": probability entries must be finite and non-negative");
        }
        sum += p;
    }
    if (std::fabs(sum - 1.0) > kSimplexTolerance) {
        fail(ErrorCode::NotOnSimplex, std::string(where) + ": probabilities sum to " + detail::format_double(sum));
    }
    // A row already normalized to rounding error is kept bit-for-bit, so
    // reading and rewriting a file is a fixed point.
    if (std::fabs(sum - 1.0) <= kRenormalizeSlack) return raw;
    Probs out{};
    for (std::size_t c = 0; c < kNumEmotions; ++c) out[c] = std::min(raw[c] / sum, 1.0);
    return out;
}

std::vector<ProbabilityVector> load_backend_outputs(const std::filesystem::path& path) {
    std::vector<ProbabilityVector> out;
    auto in = detail::open_in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto where = line_where(path, line_no);
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) fail(ErrorCode::BadRow, where + ": not a JSON object");
        ProbabilityVector v;
        for (auto [key, field] : {std::pair{"sample_id", &v.sample_id}, std::pair{"backend_id", &v.backend_id},
                                  std::pair{"variant_id", &v.variant_id}}) {
            auto it = obj.find(key);
            if (it == obj.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
                fail(ErrorCode::BadRow, where + ": missing or empty '" + key + "'");
            }
            *field = it->get<std::string>();
        }
        auto probs = obj.find("probs");
        auto parsed = probs == obj.end() ? std::nullopt : probs_from_json(*probs);
        if (!parsed) fail(ErrorCode::BadRow, where + ": probs must be an array of 9 numbers");
        v.probs = validate_probs(*parsed, where);
        out.push_back(std::move(v));
    }
    return out;
}

std::string probability_to_json_line(const ProbabilityVector& v) {
    json obj = json::object();
    obj["sample_id"] = v.sample_id;
    obj["backend_id"] = v.backend_id;
    obj["variant_id"] = v.variant_id;
    obj["probs"] = v.probs;
    return detail::dump_line(obj);
}

void write_backend_outputs(std::span<const ProbabilityVector> vectors, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& v : vectors) out << probability_to_json_line(v) << '\n';
    detail::close_out(out, path);
}

std::string request_body(const PredictionRequest& r) {
    json obj = json::object();
    obj["sample_id"] = r.prompt.sample_id;
    obj["prompt"] = r.prompt.text;
    obj["variant_id"] = r.variant ? std::string(r.variant->id()) : std::string(tta_kind_name(TtaKind::Identity));
    if (r.variant && r.variant->crop) {
        const auto& c = *r.variant->crop;
        obj["crop"] = {c.x0, c.y0, c.width, c.height};
    }
    if (r.image_ref) obj["image_ref"] = *r.image_ref;
    return detail::dump_line(obj);
}

ProbabilityVector request_prediction(const BackendDescriptor& descriptor, const PromptArtifact& prompt,
                                     const TtaVariant* variant, const std::optional<std::string>& image_ref) {
    if (descriptor.mode != BackendMode::Remote) {
        fail(ErrorCode::InvalidArgument, "backend '" + descriptor.backend_id + "' is not in remote mode");
    }
    if (descriptor.expects_image != image_ref.has_value()) {
        fail(ErrorCode::InvalidArgument, "backend '" + descriptor.backend_id + "': image_ref must be given iff the backend expects images");
    }
    PredictionRequest request{prompt, variant ? std::optional<TtaVariant>(*variant) : std::nullopt, image_ref};
    truncate_artifact(request.prompt, descriptor.max_tokens);
    const std::string body = request_body(request);
    const std::string where = descriptor.backend_id + " " + prompt.sample_id + "/" +
                              std::string(request.variant ? request.variant->id() : "identity");

    auto client = make_client(descriptor);
    auto backoff = descriptor.retry.initial_backoff;
    const unsigned attempts = std::max(1U, descriptor.retry.attempts);
    std::string last_error;
    for (unsigned attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post("/predict", body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            log::get().debug("predict {} attempt {}/{} failed: {}", where, attempt, attempts, last_error);
            if (attempt < attempts) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            continue;
        }
        if (res->status != 200) {
            fail(ErrorCode::Protocol, where + ": HTTP status " + std::to_string(res->status));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("probs")) {
            fail(ErrorCode::Protocol, where + ": response is not {\"probs\": [...]}");
        }
        auto probs = probs_from_json(reply["probs"]);
        if (!probs) fail(ErrorCode::Protocol, where + ": response probs must be 9 numbers");
        ProbabilityVector v;
        v.sample_id = prompt.sample_id;
        v.backend_id = descriptor.backend_id;
        v.variant_id = request.variant ? std::string(request.variant->id()) : std::string("identity");
        v.probs = validate_probs(*probs, where);
        return v;
    }
    fail(ErrorCode::Timeout, where + ": no response after " + std::to_string(attempts) + " attempts (" + last_error + ")");
}

std::vector<ProbabilityVector> request_batch(const BackendDescriptor& descriptor,
                                             std::span<const PredictionRequest> requests, unsigned max_in_flight) {
    std::vector<ProbabilityVector> out(requests.size());
    std::vector<std::exception_ptr> errors(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            const auto& r = requests[i];
            try {
                out[i] = request_prediction(descriptor, r.prompt, r.variant ? &*r.variant : nullptr, r.image_ref);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(std::max(1U, max_in_flight), requests.size());
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < n_workers; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

bool backend_healthy(const BackendDescriptor& descriptor) {
    auto client = make_client(descriptor);
    auto res = client.Get("/healthz");
    return res && res->status == 200;
}

}  // namespace ecsp
