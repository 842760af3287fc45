// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "ecsp/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "io_util.hpp"

namespace ecsp {

namespace {

using nlohmann::json;

constexpr char kIndexMagic[4] = {'E', 'C', 'S', 'I'};
constexpr std::uint16_t kIndexFormatVersion = 1;

// Four independent accumulators; the summation order is fixed so results are reproducible.
double dot(const double* a, const double* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double norm(std::span<const double> v) noexcept { return std::sqrt(dot(v.data(), v.data(), v.size())); }

double clamp_unit(double x) noexcept { return std::clamp(x, -1.0, 1.0); }

void scale_to_unit(std::span<double> v, const std::string& id) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::ZeroVector, "vector '" + id + "' has zero or non-finite norm");
    for (auto& x : v) x /= n;
}

std::vector<double> normalized(std::span<const float> joint, std::size_t image_dim, bool normalize_parts,
                               const std::string& id) {
    std::vector<double> v(joint.begin(), joint.end());
    if (normalize_parts) {
        auto image = std::span<double>(v).first(image_dim);
        auto text = std::span<double>(v).subspan(image_dim);
        if (!image.empty()) scale_to_unit(image, id + " (image part)");
        if (!text.empty()) scale_to_unit(text, id + " (text part)");
    }
    scale_to_unit(v, id);
    return v;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::DimensionMismatch,
             "cosine_similarity: dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorCode::ZeroVector, "cosine_similarity: zero vector");
    return clamp_unit(dot(a.data(), b.data(), a.size()) / (na * nb));
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    const std::vector<double> da(a.begin(), a.end());
    const std::vector<double> db(b.begin(), b.end());
    return cosine_similarity(std::span<const double>(da), std::span<const double>(db));
}

void LanguageIndex::append(std::string id, EmotionClass label, std::span<const double> unit_vector) {
    if (unit_vector.size() != m_dim) {
        fail(ErrorCode::DimensionMismatch, "index entry '" + id + "' has dimension " +
                                               std::to_string(unit_vector.size()) + ", expected " +
                                               std::to_string(m_dim));
    }
    m_ids.push_back(std::move(id));
    m_labels.push_back(label);
    m_vectors.insert(m_vectors.end(), unit_vector.begin(), unit_vector.end());
}

RetrievalIndex RetrievalIndex::build(std::span<const PoolEntry> pool, IndexOptions options) {
    if (pool.empty()) fail(ErrorCode::EmptyPool, "retrieval pool is empty");

    std::vector<const PoolEntry*> sorted;
    sorted.reserve(pool.size());
    for (const auto& e : pool) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const PoolEntry* a, const PoolEntry* b) { return a->record->id < b->record->id; });

    RetrievalIndex index;
    index.m_options = options;
    const auto& first = *pool.front().embedding;
    index.m_dim = first.joint().size();

    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& rec = *sorted[i]->record;
        const auto& emb = *sorted[i]->embedding;
        if (i > 0 && sorted[i - 1]->record->id == rec.id) fail(ErrorCode::DuplicateId, "duplicate pool id '" + rec.id + "'");
        if (emb.id() != rec.id) {
            fail(ErrorCode::IdMismatch, "pool record '" + rec.id + "' paired with embedding '" + emb.id() + "'");
        }
        if (rec.split != Split::Train || !rec.gold_emotion) {
            fail(ErrorCode::UnlabeledPoolRecord, "pool record '" + rec.id + "' is not a labeled train record");
        }
        if (emb.image_dim() != first.image_dim() || emb.text_dim() != first.text_dim()) {
            fail(ErrorCode::DimensionMismatch, "pool embedding '" + rec.id + "' dimension differs from the pool");
        }
        auto [it, inserted] = index.m_languages.try_emplace(rec.language, rec.language, index.m_dim);
        const auto unit = normalized(emb.joint(), emb.image_dim(), options.normalize_parts, rec.id);
        it->second.append(rec.id, *rec.gold_emotion, unit);
    }
    // Separate-part normalization needs the image width at query time.
    index.m_image_dim = first.image_dim();
    return index;
}

const LanguageIndex* RetrievalIndex::find(const LanguageTag& language) const {
    auto it = m_languages.find(language);
    return it == m_languages.end() ? nullptr : &it->second;
}

std::vector<double> RetrievalIndex::prepare_query(std::span<const float> joint, const std::string& id) const {
    if (joint.size() != m_dim) {
        fail(ErrorCode::DimensionMismatch, "query '" + id + "' has dimension " + std::to_string(joint.size()) +
                                               ", index has " + std::to_string(m_dim));
    }
    return normalized(joint, m_image_dim, m_options.normalize_parts, id);
}

void RetrievalIndex::save(const std::filesystem::path& path) const {
    std::string buf;
    buf.append(kIndexMagic, 4);
    detail::put_u16(buf, kIndexFormatVersion);
    buf.push_back(m_options.normalize_parts ? 1 : 0);
    detail::put_u32(buf, static_cast<std::uint32_t>(m_image_dim));
    detail::put_u32(buf, static_cast<std::uint32_t>(m_dim));
    detail::put_u32(buf, static_cast<std::uint32_t>(m_languages.size()));
    for (const auto& [tag, li] : m_languages) {
        detail::put_u16(buf, static_cast<std::uint16_t>(tag.value().size()));
        buf += tag.value();
        detail::put_u32(buf, static_cast<std::uint32_t>(li.size()));
        for (std::size_t i = 0; i < li.size(); ++i) {
            detail::put_u16(buf, static_cast<std::uint16_t>(li.id(i).size()));
            buf += li.id(i);
            buf.push_back(static_cast<char>(li.label(i).index()));
            for (double v : li.vector(i)) detail::put_f64(buf, v);
        }
    }
    auto out = detail::open_out(path, std::ios::out | std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    detail::close_out(out, path);
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    detail::ByteReader in(data);
    if (in.bytes(4) != std::string_view(kIndexMagic, 4)) fail(ErrorCode::CorruptFile, "bad index magic at offset 0");
    if (in.u16() != kIndexFormatVersion) fail(ErrorCode::CorruptFile, "unsupported index version at offset 4");
    RetrievalIndex index;
    index.m_options.normalize_parts = in.u8() != 0;
    index.m_image_dim = in.u32();
    index.m_dim = in.u32();
    if (index.m_image_dim > index.m_dim) fail(ErrorCode::CorruptFile, "image dimension exceeds joint dimension");
    const std::uint32_t n_lang = in.u32();
    std::vector<double> vec(index.m_dim);
    for (std::uint32_t l = 0; l < n_lang; ++l) {
        const auto name_offset = in.offset();
        const auto name = in.bytes(in.u16());
        LanguageTag tag;
        try {
            tag = LanguageTag::parse(name);
        } catch (const Error&) {
            fail(ErrorCode::CorruptFile, "bad language tag at offset " + std::to_string(name_offset));
        }
        LanguageIndex li(tag, index.m_dim);
        const std::uint32_t n = in.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string id(in.bytes(in.u16()));
            const auto label_offset = in.offset();
            const auto label = in.u8();
            if (label >= kNumEmotions) fail(ErrorCode::CorruptFile, "bad label at offset " + std::to_string(label_offset));
            for (auto& v : vec) v = in.f64();
            if (li.size() > 0 && !(li.id(li.size() - 1) < id)) {
                fail(ErrorCode::CorruptFile, "index ids out of order at offset " + std::to_string(label_offset));
            }
            li.append(std::move(id), EmotionClass::from_index(label), vec);
        }
        index.m_languages.emplace(tag, std::move(li));
    }
    if (!in.at_end()) fail(ErrorCode::CorruptFile, "trailing bytes at offset " + std::to_string(in.offset()));
    return index;
}

bool operator==(const RetrievalIndex& a, const RetrievalIndex& b) {
    if (a.m_dim != b.m_dim || a.m_image_dim != b.m_image_dim ||
        a.m_options.normalize_parts != b.m_options.normalize_parts || a.m_languages.size() != b.m_languages.size()) {
        return false;
    }
    for (auto ia = a.m_languages.begin(), ib = b.m_languages.begin(); ia != a.m_languages.end(); ++ia, ++ib) {
        const auto& la = ia->second;
        const auto& lb = ib->second;
        if (ia->first != ib->first || la.size() != lb.size()) return false;
        for (std::size_t i = 0; i < la.size(); ++i) {
            if (la.id(i) != lb.id(i) || la.label(i) != lb.label(i)) return false;
            if (!std::equal(la.vector(i).begin(), la.vector(i).end(), lb.vector(i).begin())) return false;
        }
    }
    return true;
}

std::vector<PoolEntry> train_pool(std::span<const AnnotationRecord> records, std::span<const JointEmbedding> embeddings) {
    std::unordered_map<std::string_view, const JointEmbedding*> by_id;
    for (const auto& e : embeddings) by_id.emplace(e.id(), &e);
    std::vector<PoolEntry> pool;
    for (const auto& r : records) {
        if (r.split != Split::Train) continue;
        auto it = by_id.find(r.id);
        if (it == by_id.end()) fail(ErrorCode::Validation, "id: train record '" + r.id + "' has no embedding");
        pool.push_back({&r, it->second});
    }
    return pool;
}

std::string RetrievalOutcome::pseudo_label_text() const {
    std::string out;
    for (std::size_t i = 0; i < gated_labels.size(); ++i) {
        if (i) out += ", ";
        out += gated_labels[i].name();
    }
    return out;
}

RetrievalOutcome retrieve(std::string query_id, std::span<const float> query_joint, const LanguageTag& language,
                          const RetrievalIndex& index, RetrieveParams params,
                          std::optional<std::string_view> exclude_id) {
    if (params.k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
    const LanguageIndex* li = index.find(language);
    if (!li) fail(ErrorCode::MissingLanguageIndex, "no index for language '" + language.value() + "'");
    const auto query = index.prepare_query(query_joint, query_id);

    // Ranked best-first; entries are visited in ascending id order, so an equal
    // similarity never displaces an earlier (smaller id) entry.
    struct Hit {
        double sim;
        std::size_t pos;
    };
    std::vector<Hit> top;
    top.reserve(params.k + 1);
    std::size_t eligible = 0;
    const double* q = query.data();
    const std::size_t dim = li->dim();
    for (std::size_t i = 0; i < li->size(); ++i) {
        if (exclude_id && li->id(i) == *exclude_id) continue;
        ++eligible;
        const double sim = clamp_unit(dot(q, li->vector(i).data(), dim));
        if (top.size() == params.k && !(sim > top.back().sim)) continue;
        auto at = std::upper_bound(top.begin(), top.end(), sim, [](double s, const Hit& h) { return s > h.sim; });
        top.insert(at, Hit{sim, i});
        if (top.size() > params.k) top.pop_back();
    }
    if (eligible == 0) {
        fail(ErrorCode::EmptyAfterExclusion, "no candidates left for query '" + query_id + "' in language '" +
                                                 language.value() + "'");
    }

    RetrievalOutcome out;
    out.query_id = std::move(query_id);
    out.threshold_used = params.eta;
    out.k = params.k;
    for (const auto& h : top) {
        out.neighbors.push_back({li->id(h.pos), h.sim, li->label(h.pos)});
        if (h.sim > params.eta) out.gated_labels.push_back(li->label(h.pos));
    }
    if (out.neighbors.front().similarity > params.eta) out.pseudo_label = out.neighbors.front().label;
    return out;
}

RetrievalOutcome retrieve(const JointEmbedding& query, const LanguageTag& language, const RetrievalIndex& index,
                          RetrieveParams params, std::optional<std::string_view> exclude_id) {
    return retrieve(query.id(), query.joint(), language, index, params, exclude_id);
}

std::vector<RetrievalOutcome> retrieve_batch(std::span<const RetrievalQuery> queries, const RetrievalIndex& index,
                                             RetrieveParams params, bool exclude_self, unsigned threads) {
    std::vector<RetrievalOutcome> out(queries.size());
    auto run_one = [&](std::size_t i) {
        const auto& q = queries[i];
        std::optional<std::string_view> exclude;
        if (exclude_self) exclude = q.record->id;
        out[i] = retrieve(q.record->id, q.embedding->joint(), q.record->language, index, params, exclude);
    };

    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, queries.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) run_one(i);
        return out;
    }

    // Strided partition; first error by query position wins so failures are deterministic.
    std::vector<std::exception_ptr> errors(queries.size());
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < queries.size(); i += threads) {
                try {
                    run_one(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::string outcome_to_json_line(const RetrievalOutcome& o) {
    json neighbors = json::array();
    for (const auto& n : o.neighbors) {
        neighbors.push_back({{"id", n.id}, {"sim", n.similarity}, {"label", std::string(n.label.name())}});
    }
    json labels = json::array();
    for (auto l : o.gated_labels) labels.push_back(std::string(l.name()));
    json obj = json::object();
    obj["query_id"] = o.query_id;
    obj["neighbors"] = std::move(neighbors);
    obj["pseudo_label"] = o.pseudo_label ? json(std::string(o.pseudo_label->name())) : json(nullptr);
    obj["pseudo_labels"] = std::move(labels);
    obj["eta"] = o.threshold_used;
    obj["k"] = o.k;
    return detail::dump_line(obj);
}

namespace {

RetrievalOutcome outcome_from_json(const json& obj) {
    RetrievalOutcome o;
    o.query_id = obj.at("query_id").get<std::string>();
    for (const auto& n : obj.at("neighbors")) {
        o.neighbors.push_back({n.at("id").get<std::string>(), n.at("sim").get<double>(),
                               emotion_from_name(n.at("label").get<std::string>())});
    }
    const auto& pl = obj.at("pseudo_label");
    if (!pl.is_null()) o.pseudo_label = emotion_from_name(pl.get<std::string>());
    if (auto it = obj.find("pseudo_labels"); it != obj.end()) {
        for (const auto& l : *it) o.gated_labels.push_back(emotion_from_name(l.get<std::string>()));
    } else if (o.pseudo_label) {
        o.gated_labels.push_back(*o.pseudo_label);
    }
    o.threshold_used = obj.at("eta").get<double>();
    o.k = obj.at("k").get<std::size_t>();
    return o;
}

}  // namespace

RetrievalOutcome outcome_from_json_line(std::string_view line) {
    try {
        return outcome_from_json(json::parse(line));
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("retrieval outcome: ") + e.what());
    }
}

void write_outcomes_jsonl(std::span<const RetrievalOutcome> outcomes, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& o : outcomes) out << outcome_to_json_line(o) << '\n';
    detail::close_out(out, path);
}

std::vector<RetrievalOutcome> load_outcomes_jsonl(const std::filesystem::path& path) {
    std::vector<RetrievalOutcome> out;
    detail::for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(outcome_from_json(obj)); });
    return out;
}

}  // namespace ecsp
