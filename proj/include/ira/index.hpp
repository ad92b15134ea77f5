// Copyright 2026-present the ira project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/unit_store.hpp"

namespace ira {

enum class IndexMode { exact, approximate };

/// Navigable-small-world build/search parameters (approximate mode only).
struct IndexParams {
    std::uint32_t graph_degree = 16;     // M: links per node above level 0 (2M at level 0)
    std::uint32_t build_breadth = 128;   // beam width during construction
    std::uint32_t search_breadth = 128;  // minimum beam width during queries
    std::uint64_t level_seed = 0x697261696478ULL;

    bool operator==(const IndexParams&) const = default;
};

struct SearchHit {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const SearchHit&) const = default;
};

namespace detail {

/// Dot product with double accumulation: the one similarity kernel used by
/// both index modes, so exact and approximate scores are bit-comparable.
inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

/// Candidate ordering used everywhere in the index: higher similarity
/// first, lower slot (== lexicographically smaller doc_id) on ties.
struct Scored {
    double sim;
    std::uint32_t slot;
};
inline bool better(const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.slot < b.slot;
}

}  // namespace detail

/// Immutable document-side vector index. Exact mode scans every vector and
/// is the correctness oracle; approximate mode answers through a layered
/// proximity graph. Rebuild-and-swap, never mutate.
class DocumentIndex {
public:
    DocumentIndex() = default;

    IndexMode mode() const { return mode_; }
    const EmbedderConfig& embedder_config() const { return embedder_config_; }
    const IndexParams& params() const { return params_; }
    std::size_t size() const { return docs_.size(); }
    std::size_t dimension() const { return dimension_; }

    const Document& document(std::size_t slot) const { return docs_[slot]; }
    std::span<const float> vector(std::size_t slot) const {
        return {vectors_.data() + slot * dimension_, dimension_};
    }
    std::optional<std::size_t> find_slot(const std::string& doc_id) const {
        auto it = slot_of_.find(doc_id);
        if (it == slot_of_.end()) return std::nullopt;
        return it->second;
    }

    /// Top-n most similar documents, similarity descending, ties by doc_id
    /// ascending. Zero-vector queries match nothing.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t n) const {
        std::vector<SearchHit> hits;
        for (auto [sim, slot] : search_slots(query, n))
            hits.push_back(SearchHit{docs_[slot].doc_id, sim});
        return hits;
    }

    /// Slot-level variant of search() for callers that re-use the stored
    /// vectors (retrieval scoring) instead of copying doc_id strings.
    std::vector<std::pair<double, std::uint32_t>> search_slots(const EmbeddingVector& query,
                                                               std::size_t n) const {
        if (query.dimension() != dimension_) {
            throw MismatchError("index search: query dimension " +
                                std::to_string(query.dimension()) + " != index dimension " +
                                std::to_string(dimension_));
        }
        if (n == 0 || docs_.empty() || query.is_zero()) return {};
        std::vector<detail::Scored> top =
            mode_ == IndexMode::exact ? scan_all(query) : graph_search(query, n);
        std::sort(top.begin(), top.end(), detail::better);
        if (top.size() > n) top.resize(n);
        std::vector<std::pair<double, std::uint32_t>> out;
        out.reserve(top.size());
        for (const auto& s : top) out.emplace_back(s.sim, s.slot);
        return out;
    }

    static DocumentIndex build(std::vector<Document> docs, const EmbedderConfig& embedder_config,
                               IndexMode mode, IndexParams params = {},
                               const std::unordered_map<std::string, std::vector<float>>*
                                   precomputed = nullptr);

    bool operator==(const DocumentIndex&) const = default;

private:
    double sim_to(std::span<const float> query, std::uint32_t slot) const {
        return detail::dot(query, vector(slot));
    }

    std::vector<detail::Scored> scan_all(const EmbeddingVector& query) const {
        const auto q = query.values();
        std::vector<detail::Scored> all;
        all.reserve(docs_.size());
        for (std::uint32_t slot = 0; slot < docs_.size(); ++slot)
            all.push_back({sim_to(q, slot), slot});
        return all;
    }

    // --- layered proximity graph ------------------------------------------

    std::uint32_t node_level(std::uint32_t slot) const {
        // Geometric level assignment; seeded per slot, so the structure is a
        // pure function of (docs, params).
        std::uint64_t r = splitmix64(params_.level_seed ^
                                     (static_cast<std::uint64_t>(slot) * 0x9E3779B97F4A7C15ULL));
        double u = static_cast<double>(r >> 11) * 0x1.0p-53;
        if (u <= 0.0) u = 0x1.0p-53;
        const double ml = 1.0 / std::log(static_cast<double>(params_.graph_degree));
        return static_cast<std::uint32_t>(-std::log(u) * ml);
    }

    std::uint32_t max_degree(std::uint32_t level) const {
        return level == 0 ? params_.graph_degree * 2 : params_.graph_degree;
    }

    std::vector<std::uint32_t>& neighbors(std::uint32_t slot, std::uint32_t level) {
        return graph_[slot][level];
    }
    const std::vector<std::uint32_t>& neighbors(std::uint32_t slot, std::uint32_t level) const {
        return graph_[slot][level];
    }

    std::uint32_t greedy_descend(std::span<const float> q, std::uint32_t start,
                                 std::uint32_t level) const {
        std::uint32_t best = start;
        double best_sim = sim_to(q, best);
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t nb : neighbors(best, level)) {
                double s = sim_to(q, nb);
                if (detail::better({s, nb}, {best_sim, best})) {
                    best = nb;
                    best_sim = s;
                    improved = true;
                }
            }
        }
        return best;
    }

    /// Beam search within one level; returns up to ef results, best first.
    std::vector<detail::Scored> search_layer(std::span<const float> q, std::uint32_t entry,
                                             std::uint32_t ef, std::uint32_t level,
                                             std::vector<std::uint32_t>& visit_stamp,
                                             std::uint32_t stamp) const {
        // candidates pops best-first; results keeps its weakest entry on top.
        std::priority_queue<detail::Scored, std::vector<detail::Scored>,
                            bool (*)(const detail::Scored&, const detail::Scored&)>
            candidates(+[](const detail::Scored& a, const detail::Scored& b) {
                return detail::better(b, a);
            }),
            results(+[](const detail::Scored& a, const detail::Scored& b) {
                return detail::better(a, b);
            });

        visit_stamp[entry] = stamp;
        detail::Scored e{sim_to(q, entry), entry};
        candidates.push(e);
        results.push(e);

        while (!candidates.empty()) {
            detail::Scored c = candidates.top();
            candidates.pop();
            if (results.size() >= ef && detail::better(results.top(), c)) break;
            for (std::uint32_t nb : neighbors(c.slot, level)) {
                if (visit_stamp[nb] == stamp) continue;
                visit_stamp[nb] = stamp;
                detail::Scored cand{sim_to(q, nb), nb};
                if (results.size() < ef || detail::better(cand, results.top())) {
                    candidates.push(cand);
                    results.push(cand);
                    if (results.size() > ef) results.pop();
                }
            }
        }
        std::vector<detail::Scored> out;
        out.reserve(results.size());
        while (!results.empty()) {
            out.push_back(results.top());
            results.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Neighbor-selection heuristic: prefer candidates closer to the query
    /// than to anything already selected (keeps the graph navigable across
    /// clusters); backfill with skipped candidates if the quota is unmet.
    std::vector<std::uint32_t> select_neighbors(std::span<const detail::Scored> candidates,
                                                std::uint32_t m) const {
        std::vector<std::uint32_t> selected;
        std::vector<std::uint32_t> skipped;
        for (const auto& cand : candidates) {
            if (selected.size() >= m) break;
            bool closer_to_selected = false;
            for (std::uint32_t s : selected) {
                if (detail::dot(vector(cand.slot), vector(s)) > cand.sim) {
                    closer_to_selected = true;
                    break;
                }
            }
            if (closer_to_selected) {
                skipped.push_back(cand.slot);
            } else {
                selected.push_back(cand.slot);
            }
        }
        for (std::uint32_t slot : skipped) {
            if (selected.size() >= m) break;
            selected.push_back(slot);
        }
        return selected;
    }

    void shrink_links(std::uint32_t slot, std::uint32_t level) {
        auto& links = neighbors(slot, level);
        const std::uint32_t cap = max_degree(level);
        if (links.size() <= cap) return;
        const auto base = vector(slot);
        std::vector<detail::Scored> cands;
        cands.reserve(links.size());
        for (std::uint32_t nb : links) cands.push_back({detail::dot(base, vector(nb)), nb});
        std::sort(cands.begin(), cands.end(), detail::better);
        links = select_neighbors(cands, cap);
    }

    void insert_node(std::uint32_t slot, std::vector<std::uint32_t>& visit_stamp,
                     std::uint32_t& stamp) {
        const std::uint32_t level = node_level(slot);
        graph_[slot].assign(level + 1, {});
        if (slot == 0) {
            entry_point_ = 0;
            top_level_ = level;
            return;
        }
        const auto q = vector(slot);
        std::uint32_t ep = entry_point_;
        for (std::uint32_t lev = top_level_; lev > level; --lev)
            ep = greedy_descend(q, ep, lev);

        const std::uint32_t ef = std::max<std::uint32_t>(params_.build_breadth, 1);
        for (std::int64_t lev = std::min(level, top_level_); lev >= 0; --lev) {
            const auto l = static_cast<std::uint32_t>(lev);
            ++stamp;
            auto found = search_layer(q, ep, ef, l, visit_stamp, stamp);
            auto links = select_neighbors(found, params_.graph_degree);
            neighbors(slot, l) = links;
            for (std::uint32_t nb : links) {
                neighbors(nb, l).push_back(slot);
                shrink_links(nb, l);
            }
            ep = found.front().slot;
        }
        if (level > top_level_) {
            top_level_ = level;
            entry_point_ = slot;
        }
    }

    std::vector<detail::Scored> graph_search(const EmbeddingVector& query, std::size_t n) const {
        const auto q = query.values();
        std::uint32_t ep = entry_point_;
        for (std::uint32_t lev = top_level_; lev > 0; --lev) ep = greedy_descend(q, ep, lev);
        const auto ef = static_cast<std::uint32_t>(
            std::max<std::size_t>(params_.search_breadth, n));
        std::vector<std::uint32_t> visit_stamp(docs_.size(), 0);
        return search_layer(q, ep, ef, 0, visit_stamp, 1);
    }

    // --- state -------------------------------------------------------------

    IndexMode mode_ = IndexMode::exact;
    EmbedderConfig embedder_config_;
    IndexParams params_;
    std::size_t dimension_ = 0;
    std::vector<Document> docs_;  // sorted by doc_id ascending; slot = rank
    std::vector<float> vectors_;  // docs_.size() x dimension_, row-major
    std::unordered_map<std::string, std::size_t> slot_of_;
    // Adjacency: graph_[slot][level] -> neighbor slots. Empty in exact mode.
    std::vector<std::vector<std::vector<std::uint32_t>>> graph_;
    std::uint32_t entry_point_ = 0;
    std::uint32_t top_level_ = 0;

    friend void save_index(const DocumentIndex&, const std::filesystem::path&);
    friend DocumentIndex load_index(const std::filesystem::path&);
};

inline DocumentIndex DocumentIndex::build(
    std::vector<Document> docs, const EmbedderConfig& embedder_config, IndexMode mode,
    IndexParams params, const std::unordered_map<std::string, std::vector<float>>* precomputed) {
    validate(embedder_config);
    if (params.graph_degree < 2) throw ConfigError("index: graph_degree must be >= 2");
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].doc_id == docs[i - 1].doc_id)
            throw DataError("index build: duplicate doc_id '" + docs[i].doc_id + "'");
    }

    DocumentIndex index;
    index.mode_ = mode;
    index.embedder_config_ = embedder_config;
    index.params_ = params;
    index.dimension_ = embedder_config.dimension;
    index.docs_ = std::move(docs);
    index.vectors_.resize(index.docs_.size() * index.dimension_);
    index.slot_of_.reserve(index.docs_.size());

    const auto embedder = make_embedder(embedder_config);
    for (std::size_t slot = 0; slot < index.docs_.size(); ++slot) {
        const Document& doc = index.docs_[slot];
        index.slot_of_.emplace(doc.doc_id, slot);
        EmbeddingVector vec;
        const std::vector<float>* pre = nullptr;
        if (precomputed) {
            auto it = precomputed->find(doc.doc_id);
            if (it != precomputed->end()) pre = &it->second;
        }
        if (pre) {
            if (pre->size() != index.dimension_) {
                throw MismatchError("precomputed vector for '" + doc.doc_id + "' has dimension " +
                                    std::to_string(pre->size()) + ", index expects " +
                                    std::to_string(index.dimension_));
            }
            // Normalize defensively: external models owe us unit vectors but
            // the similarity contract depends on it.
            std::vector<float> values = *pre;
            double norm = 0.0;
            for (float v : values) norm += static_cast<double>(v) * static_cast<double>(v);
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (float& v : values) v = static_cast<float>(static_cast<double>(v) / norm);
            vec = EmbeddingVector(std::move(values));
        } else {
            vec = embedder->embed(doc.title);
        }
        std::copy(vec.values().begin(), vec.values().end(),
                  index.vectors_.begin() + static_cast<std::ptrdiff_t>(slot * index.dimension_));
    }

    if (mode == IndexMode::approximate && !index.docs_.empty()) {
        index.graph_.resize(index.docs_.size());
        std::vector<std::uint32_t> visit_stamp(index.docs_.size(), 0);
        std::uint32_t stamp = 0;
        for (std::uint32_t slot = 0; slot < index.docs_.size(); ++slot)
            index.insert_node(slot, visit_stamp, stamp);
    }
    return index;
}

// --- binary persistence -----------------------------------------------------
// Layout: magic "IRAINDEX", version byte, then little-endian fields. The
// format is an internal artifact, not a cross-machine exchange format.

namespace detail {

inline constexpr char kIndexMagic[8] = {'I', 'R', 'A', 'I', 'N', 'D', 'E', 'X'};
inline constexpr std::uint8_t kIndexVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

inline void write_string(std::ofstream& out, const std::string& s) {
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::ifstream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!in) throw DataError("index file: truncated");
    return value;
}

inline std::string read_string(std::ifstream& in) {
    auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("index file: truncated string");
    return s;
}

}  // namespace detail

inline void save_index(const DocumentIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open index file for writing: " + path.string());
    using namespace detail;
    out.write(kIndexMagic, sizeof(kIndexMagic));
    write_pod(out, kIndexVersion);
    write_pod(out, static_cast<std::uint8_t>(index.mode_));

    const EmbedderConfig& ec = index.embedder_config_;
    write_pod(out, static_cast<std::uint8_t>(ec.kind));
    write_pod(out, static_cast<std::uint64_t>(ec.dimension));
    write_pod(out, ec.seed);
    write_pod(out, static_cast<std::uint64_t>(ec.vocabulary.size()));
    for (const auto& term : ec.vocabulary) write_string(out, term);

    write_pod(out, index.params_.graph_degree);
    write_pod(out, index.params_.build_breadth);
    write_pod(out, index.params_.search_breadth);
    write_pod(out, index.params_.level_seed);

    write_pod(out, static_cast<std::uint64_t>(index.docs_.size()));
    for (const Document& doc : index.docs_) {
        write_string(out, doc.doc_id);
        write_string(out, doc.title);
        write_pod(out, doc.timestamp);
        write_pod(out, static_cast<std::uint32_t>(doc.key_terms.size()));
        for (const auto& [term, count] : doc.key_terms) {
            write_string(out, term);
            write_pod(out, count);
        }
    }
    if (!index.vectors_.empty()) {
        out.write(reinterpret_cast<const char*>(index.vectors_.data()),
                  static_cast<std::streamsize>(index.vectors_.size() * sizeof(float)));
    }

    write_pod(out, index.entry_point_);
    write_pod(out, index.top_level_);
    write_pod(out, static_cast<std::uint8_t>(index.graph_.empty() ? 0 : 1));
    if (!index.graph_.empty()) {
        for (const auto& levels : index.graph_) {
            write_pod(out, static_cast<std::uint32_t>(levels.size()));
            for (const auto& links : levels) {
                write_pod(out, static_cast<std::uint32_t>(links.size()));
                for (std::uint32_t nb : links) write_pod(out, nb);
            }
        }
    }
    if (!out) throw DataError("failed while writing index file: " + path.string());
}

inline DocumentIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path.string());
    using namespace detail;
    char magic[sizeof(kIndexMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0)
        throw DataError("index file: bad magic header: " + path.string());
    const auto version = read_pod<std::uint8_t>(in);
    if (version != kIndexVersion) {
        throw VersionError("index file: unsupported version " + std::to_string(version) +
                           " (expected " + std::to_string(kIndexVersion) + ")");
    }

    DocumentIndex index;
    index.mode_ = static_cast<IndexMode>(read_pod<std::uint8_t>(in));
    index.embedder_config_.kind = static_cast<EmbedderKind>(read_pod<std::uint8_t>(in));
    index.embedder_config_.dimension = read_pod<std::uint64_t>(in);
    index.embedder_config_.seed = read_pod<std::uint64_t>(in);
    const auto vocab_size = read_pod<std::uint64_t>(in);
    index.embedder_config_.vocabulary.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i)
        index.embedder_config_.vocabulary.push_back(read_string(in));

    index.params_.graph_degree = read_pod<std::uint32_t>(in);
    index.params_.build_breadth = read_pod<std::uint32_t>(in);
    index.params_.search_breadth = read_pod<std::uint32_t>(in);
    index.params_.level_seed = read_pod<std::uint64_t>(in);

    index.dimension_ = index.embedder_config_.dimension;
    const auto doc_count = read_pod<std::uint64_t>(in);
    index.docs_.reserve(doc_count);
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        Document doc;
        doc.doc_id = read_string(in);
        doc.title = read_string(in);
        doc.timestamp = read_pod<std::int64_t>(in);
        const auto term_count = read_pod<std::uint32_t>(in);
        for (std::uint32_t t = 0; t < term_count; ++t) {
            std::string term = read_string(in);
            doc.key_terms[std::move(term)] = read_pod<std::uint32_t>(in);
        }
        index.slot_of_.emplace(doc.doc_id, index.docs_.size());
        index.docs_.push_back(std::move(doc));
    }
    index.vectors_.resize(doc_count * index.dimension_);
    if (!index.vectors_.empty()) {
        in.read(reinterpret_cast<char*>(index.vectors_.data()),
                static_cast<std::streamsize>(index.vectors_.size() * sizeof(float)));
        if (!in) throw DataError("index file: truncated vector block");
    }

    index.entry_point_ = read_pod<std::uint32_t>(in);
    index.top_level_ = read_pod<std::uint32_t>(in);
    const auto has_graph = read_pod<std::uint8_t>(in);
    if (has_graph) {
        index.graph_.resize(doc_count);
        for (auto& levels : index.graph_) {
            levels.resize(read_pod<std::uint32_t>(in));
            for (auto& links : levels) {
                links.resize(read_pod<std::uint32_t>(in));
                for (auto& nb : links) nb = read_pod<std::uint32_t>(in);
            }
        }
    }
    return index;
}

/// Convenience wrappers matching the operation names used in docs/tests.
inline DocumentIndex build_index(std::vector<Document> docs, const EmbedderConfig& embedder_config,
                                 IndexMode mode = IndexMode::exact, IndexParams params = {}) {
    return DocumentIndex::build(std::move(docs), embedder_config, mode, params);
}

inline std::vector<SearchHit> search(const DocumentIndex& index, const EmbeddingVector& query,
                                     std::size_t n) {
    return index.search(query, n);
}

}  // namespace ira
