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
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/index.hpp"
#include "ira/io.hpp"
#include "ira/unit_store.hpp"

namespace ira {

/// Leave-last-out evaluation protocol: chronological split, per-test-item
/// candidate sampling with a semantic-distinctness filter, HR@N / NDCG@N.
struct EvalConfig {
    std::uint32_t min_clicks = 15;
    std::uint32_t max_clicks = 200;  // outlier cutoff; heavier users are dropped
    std::uint32_t test_tail = 5;     // most recent clicks held out per user
    std::uint32_t candidates_per_eval = 495;
    double distinct_sim_threshold = 0.4;
    std::vector<std::uint32_t> metric_cutoffs = {5, 20, 50};
    std::uint64_t rng_seed = 17;

    bool operator==(const EvalConfig&) const = default;
};

inline void validate(const EvalConfig& config) {
    if (config.test_tail < 1) throw ConfigError("eval: test_tail must be >= 1");
    if (config.min_clicks <= config.test_tail)
        throw ConfigError("eval: min_clicks must exceed test_tail");
    if (config.max_clicks < config.min_clicks)
        throw ConfigError("eval: max_clicks below min_clicks");
    if (config.metric_cutoffs.empty()) throw ConfigError("eval: no metric cutoffs");
    for (std::uint32_t n : config.metric_cutoffs) {
        if (n == 0) throw ConfigError("eval: zero metric cutoff");
        if (config.candidates_per_eval < n)
            throw ConfigError("eval: candidates_per_eval below cutoff " + std::to_string(n));
    }
    if (config.distinct_sim_threshold <= 0.0 || config.distinct_sim_threshold > 1.0)
        throw ConfigError("eval: distinct_sim_threshold outside (0,1]");
}

// --- chronological split -------------------------------------------------------

struct UserSplit {
    std::string user_id;
    std::vector<ClickEvent> train;
    std::vector<ClickEvent> test;  // the test_tail most recent clicks
};

struct SplitResult {
    std::vector<UserSplit> users;  // user_id ascending
    std::uint32_t excluded_short = 0;
    std::uint32_t excluded_long = 0;
};

/// Pre: each user's clicks sorted by (timestamp, doc_id) ascending, as
/// group_clicks_by_user produces.
inline SplitResult split_dataset(const std::map<std::string, std::vector<ClickEvent>>& by_user,
                                 const EvalConfig& config) {
    SplitResult result;
    for (const auto& [user_id, clicks] : by_user) {
        if (clicks.size() < config.min_clicks || clicks.size() <= config.test_tail) {
            ++result.excluded_short;
            continue;
        }
        if (clicks.size() > config.max_clicks) {
            ++result.excluded_long;
            continue;
        }
        UserSplit split;
        split.user_id = user_id;
        const std::size_t cut = clicks.size() - config.test_tail;
        split.train.assign(clicks.begin(), clicks.begin() + static_cast<std::ptrdiff_t>(cut));
        split.test.assign(clicks.begin() + static_cast<std::ptrdiff_t>(cut), clicks.end());
        result.users.push_back(std::move(split));
    }
    return result;
}

// --- metrics -------------------------------------------------------------------

/// Rank is 1-based; nullopt means the item was not retrieved at all.
inline double hit_ratio(std::optional<std::uint32_t> rank, std::uint32_t n) {
    return rank.has_value() && *rank <= n ? 1.0 : 0.0;
}

/// Single-relevant-item NDCG: ideal DCG is 1, so N@n = 1/log2(rank+1).
inline double ndcg(std::optional<std::uint32_t> rank, std::uint32_t n) {
    if (!rank.has_value() || *rank > n) return 0.0;
    return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

// --- candidate corpus ----------------------------------------------------------

/// Corpus with title embeddings precomputed once (sparse: titles have few
/// distinct tokens, and sparse dots equal the dense ones bitwise).
/// Not thread-safe: the eligibility cache mutates on use.
struct EvalCorpus {
    std::vector<Document> docs;
    std::vector<detail::SparseEntries> vectors;
    std::unordered_map<std::string, std::uint32_t> slot_of;

    // Eligible-candidate lists are a pure function of (corpus, threshold);
    // memoized so repeated evaluations (ablation variants) pay once.
    mutable std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> eligible_cache;
    mutable double cached_threshold = -1.0;
};

inline EvalCorpus build_eval_corpus(const std::vector<Document>& docs, const Embedder& embedder) {
    EvalCorpus corpus;
    corpus.docs = docs;
    corpus.vectors.reserve(docs.size());
    for (std::uint32_t slot = 0; slot < corpus.docs.size(); ++slot) {
        const Document& doc = corpus.docs[slot];
        if (!corpus.slot_of.emplace(doc.doc_id, slot).second)
            throw DataError("eval corpus: duplicate doc_id '" + doc.doc_id + "'");
        corpus.vectors.push_back(detail::sparsify(embedder.embed(doc.title)));
    }
    return corpus;
}

struct CandidateSample {
    std::vector<std::uint32_t> slots;
    bool shortfall = false;  // eligible pool smaller than the quota
};

/// Uniform sample (without replacement) of candidates whose title cosine to
/// the test item is below the distinctness threshold. Seeded and
/// reproducible; the test item itself is never eligible.
inline CandidateSample sample_candidates(std::uint32_t test_slot, const EvalCorpus& corpus,
                                         const EvalConfig& config, RandomSource& rng) {
    if (corpus.cached_threshold != config.distinct_sim_threshold) {
        corpus.eligible_cache.clear();
        corpus.cached_threshold = config.distinct_sim_threshold;
    }
    auto cached = corpus.eligible_cache.find(test_slot);
    if (cached == corpus.eligible_cache.end()) {
        const detail::SparseEntries& test_vec = corpus.vectors[test_slot];
        std::vector<std::uint32_t> eligible;
        for (std::uint32_t slot = 0; slot < corpus.docs.size(); ++slot) {
            if (slot == test_slot) continue;
            if (detail::sparse_sparse_dot(test_vec, corpus.vectors[slot]) <
                config.distinct_sim_threshold)
                eligible.push_back(slot);
        }
        cached = corpus.eligible_cache.emplace(test_slot, std::move(eligible)).first;
    }
    const std::vector<std::uint32_t>& eligible = cached->second;
    CandidateSample sample;
    if (eligible.size() <= config.candidates_per_eval) {
        sample.slots = eligible;
        sample.shortfall = sample.slots.size() < config.candidates_per_eval;
        return sample;
    }
    for (std::uint32_t pick : sample_distinct(static_cast<std::uint32_t>(eligible.size()),
                                              config.candidates_per_eval, rng))
        sample.slots.push_back(eligible[pick]);
    return sample;
}

/// Most similar training document by title embedding (ties: lowest doc_id).
/// Maps cold/unseen items onto the training universe for ID-based systems.
inline std::string map_cold_item(const Document& doc, const DocumentIndex& train_index,
                                 const Embedder& embedder) {
    if (train_index.size() == 0) throw DataError("map_cold_item: empty training index");
    const EmbeddingVector vec = embedder.embed(doc.title);
    double best = -1.0;
    std::uint32_t best_slot = 0;
    for (std::uint32_t slot = 0; slot < train_index.size(); ++slot) {
        // Slots are doc_id-ascending, so strict > keeps the lowest id on ties.
        const double sim = detail::dot(vec.values(), train_index.vector(slot));
        if (sim > best) {
            best = sim;
            best_slot = slot;
        }
    }
    return train_index.document(best_slot).doc_id;
}

inline std::string map_cold_item(const Document& doc, const DocumentIndex& train_index) {
    return map_cold_item(doc, train_index, *make_embedder(train_index.embedder_config()));
}

// --- rankable systems ----------------------------------------------------------

/// A system ranks a candidate set (which includes the hidden test item) into
/// a full ordering, best first. Throwing marks the user as skipped.
class Ranker {
public:
    virtual ~Ranker() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> rank(const std::string& user_id,
                                          const std::vector<std::string>& items) = 0;
};

/// Sum-of-unit-similarities scoring against per-user profiles (Algorithm 2's
/// scoring rule applied to an explicit candidate set).
class IraRanker : public Ranker {
public:
    IraRanker(std::string name, const EvalCorpus* corpus,
              std::map<std::string, UserProfile> profiles)
        : name_(std::move(name)), corpus_(corpus), profiles_(std::move(profiles)) {}

    std::string name() const override { return name_; }

    const std::map<std::string, UserProfile>& profiles() const { return profiles_; }

    std::vector<std::string> rank(const std::string& user_id,
                                  const std::vector<std::string>& items) override {
        const auto it = profiles_.find(user_id);
        if (it == profiles_.end()) throw DataError("ira ranker: unknown user '" + user_id + "'");
        const UserProfile& profile = it->second;
        std::vector<std::pair<double, std::string_view>> scored;
        scored.reserve(items.size());
        for (const std::string& id : items) {
            const auto slot = corpus_->slot_of.find(id);
            if (slot == corpus_->slot_of.end())
                throw DataError("ira ranker: item '" + id + "' not in corpus");
            const detail::SparseEntries& vec = corpus_->vectors[slot->second];
            double score = 0.0;
            for (const InterestUnit& unit : profile.units)
                score += detail::sparse_cosine(vec, unit.embedding);
            scored.emplace_back(score, id);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::string> ordering;
        ordering.reserve(scored.size());
        for (const auto& [score, id] : scored) ordering.emplace_back(id);
        return ordering;
    }

private:
    std::string name_;
    const EvalCorpus* corpus_;
    std::map<std::string, UserProfile> profiles_;
};

/// Global ordering by training popularity (count desc, doc_id asc); items
/// absent from the log count zero.
inline std::vector<std::string> item_pop_rank(const std::vector<ClickEvent>& train,
                                              std::vector<std::string> universe) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const ClickEvent& click : train) ++counts[click.doc_id];
    std::sort(universe.begin(), universe.end(),
              [&](const std::string& a, const std::string& b) {
                  const auto ca = counts.count(a) ? counts.at(a) : 0;
                  const auto cb = counts.count(b) ? counts.at(b) : 0;
                  if (ca != cb) return ca > cb;
                  return a < b;
              });
    return universe;
}

/// Popularity baseline. ID-based, so unseen items are first mapped to their
/// most similar training document (memoized across evaluations).
class ItemPopRanker : public Ranker {
public:
    ItemPopRanker(const EvalCorpus* corpus, const std::vector<UserSplit>& splits)
        : corpus_(corpus) {
        for (const UserSplit& split : splits)
            for (const ClickEvent& click : split.train) ++counts_[click.doc_id];
        // Training universe in doc_id order so similarity ties resolve to the
        // lowest id, matching map_cold_item.
        for (const auto& [doc_id, count] : std::map<std::string, std::uint64_t>(
                 counts_.begin(), counts_.end())) {
            const auto slot = corpus_->slot_of.find(doc_id);
            if (slot != corpus_->slot_of.end()) train_slots_.push_back(slot->second);
        }
    }

    std::string name() const override { return "itempop"; }

    std::vector<std::string> rank(const std::string&,
                                  const std::vector<std::string>& items) override {
        std::vector<std::pair<std::uint64_t, std::string_view>> scored;
        scored.reserve(items.size());
        for (const std::string& id : items) scored.emplace_back(popularity(id), id);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::string> ordering;
        ordering.reserve(scored.size());
        for (const auto& [count, id] : scored) ordering.emplace_back(id);
        return ordering;
    }

private:
    std::uint64_t popularity(const std::string& doc_id) {
        if (const auto seen = counts_.find(doc_id); seen != counts_.end()) return seen->second;
        if (train_slots_.empty()) return 0;
        if (const auto memo = cold_.find(doc_id); memo != cold_.end()) return memo->second;
        const auto slot = corpus_->slot_of.find(doc_id);
        if (slot == corpus_->slot_of.end())
            throw DataError("itempop: item '" + doc_id + "' not in corpus");
        const detail::SparseEntries& vec = corpus_->vectors[slot->second];
        double best = -1.0;
        std::uint32_t best_slot = train_slots_.front();
        for (std::uint32_t train_slot : train_slots_) {
            const double sim = detail::sparse_sparse_dot(vec, corpus_->vectors[train_slot]);
            if (sim > best) {
                best = sim;
                best_slot = train_slot;
            }
        }
        const std::uint64_t count = counts_.at(corpus_->docs[best_slot].doc_id);
        cold_.emplace(doc_id, count);
        return count;
    }

    const EvalCorpus* corpus_;
    std::unordered_map<std::string, std::uint64_t> counts_;
    std::vector<std::uint32_t> train_slots_;  // doc_id ascending
    std::unordered_map<std::string, std::uint64_t> cold_;
};

/// Uniform-random full ordering; deterministic per (seed, user, call index).
class RandomRanker : public Ranker {
public:
    explicit RandomRanker(std::uint64_t seed) : seed_(seed) {}

    std::string name() const override { return "random"; }

    std::vector<std::string> rank(const std::string& user_id,
                                  const std::vector<std::string>& items) override {
        std::vector<std::string> ordering = items;
        std::sort(ordering.begin(), ordering.end());
        RandomSource rng =
            RandomSource(seed_).fork(fnv1a64(user_id)).fork(calls_[user_id]++);
        shuffle(ordering, rng);
        return ordering;
    }

private:
    std::uint64_t seed_;
    std::unordered_map<std::string, std::uint32_t> calls_;
};

// --- evaluation ----------------------------------------------------------------

struct PerUserMetrics {
    std::string user_id;
    std::map<std::uint32_t, double> hr;    // cutoff -> mean over this user's evals
    std::map<std::uint32_t, double> ndcg;  // cutoff -> mean
    std::uint32_t evaluations = 0;
};

struct EvalReport {
    std::string system;
    EvalConfig config;
    std::map<std::uint32_t, double> hr;    // cutoff -> mean over users
    std::map<std::uint32_t, double> ndcg;  // cutoff -> mean over users
    std::uint32_t users_evaluated = 0;
    std::uint32_t users_skipped = 0;
    std::uint32_t excluded_short = 0;
    std::uint32_t excluded_long = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t shortfall_evals = 0;
    std::uint64_t corpus_items = 0;
    std::uint64_t interactions = 0;     // train + test clicks over evaluated users
    std::uint64_t cold_test_items = 0;  // test items absent from global train
    bool skipped_flag = false;          // > 1% of users skipped
    bool shortfall_flag = false;
    std::vector<PerUserMetrics> per_user;
};

/// One evaluation per held-out test item: rank the test item among its
/// sampled candidates, read off the metrics at each cutoff. Candidate sets
/// depend only on (seed, user, test position), so competing systems see
/// identical draws.
inline EvalReport evaluate(Ranker& system, const SplitResult& split, const EvalCorpus& corpus,
                           const EvalConfig& config) {
    validate(config);
    EvalReport report;
    report.system = system.name();
    report.config = config;
    report.excluded_short = split.excluded_short;
    report.excluded_long = split.excluded_long;
    report.corpus_items = corpus.docs.size();

    std::unordered_set<std::string> train_docs;
    for (const UserSplit& user : split.users)
        for (const ClickEvent& click : user.train) train_docs.insert(click.doc_id);

    RandomSource root(config.rng_seed);
    for (const UserSplit& user : split.users) {
        PerUserMetrics per_user;
        per_user.user_id = user.user_id;
        bool failed = false;
        for (std::size_t t = 0; t < user.test.size() && !failed; ++t) {
            const ClickEvent& test = user.test[t];
            RandomSource rng = root.fork(fnv1a64(user.user_id)).fork(t);
            const auto test_slot = corpus.slot_of.find(test.doc_id);
            if (test_slot == corpus.slot_of.end()) {
                failed = true;
                break;
            }
            CandidateSample sample = sample_candidates(test_slot->second, corpus, config, rng);
            std::vector<std::string> items;
            items.reserve(sample.slots.size() + 1);
            for (std::uint32_t slot : sample.slots) items.push_back(corpus.docs[slot].doc_id);
            items.push_back(test.doc_id);

            std::vector<std::string> ordering;
            try {
                ordering = system.rank(user.user_id, items);
            } catch (const Error&) {
                failed = true;
                break;
            }
            const auto pos = std::find(ordering.begin(), ordering.end(), test.doc_id);
            std::optional<std::uint32_t> rank;
            if (pos != ordering.end())
                rank = static_cast<std::uint32_t>(pos - ordering.begin()) + 1;

            for (std::uint32_t n : config.metric_cutoffs) {
                per_user.hr[n] += hit_ratio(rank, n);
                per_user.ndcg[n] += ndcg(rank, n);
            }
            per_user.evaluations++;
            if (sample.shortfall) report.shortfall_evals++;
            if (!train_docs.contains(test.doc_id)) report.cold_test_items++;
        }
        if (failed || per_user.evaluations == 0) {
            report.users_skipped++;
            continue;
        }
        for (std::uint32_t n : config.metric_cutoffs) {
            per_user.hr[n] /= per_user.evaluations;
            per_user.ndcg[n] /= per_user.evaluations;
            report.hr[n] += per_user.hr[n];
            report.ndcg[n] += per_user.ndcg[n];
        }
        report.users_evaluated++;
        report.evaluations += per_user.evaluations;
        report.interactions += user.train.size() + user.test.size();
        report.per_user.push_back(std::move(per_user));
    }
    if (report.users_evaluated > 0) {
        for (std::uint32_t n : config.metric_cutoffs) {
            report.hr[n] /= report.users_evaluated;
            report.ndcg[n] /= report.users_evaluated;
        }
    }
    const auto considered = report.users_evaluated + report.users_skipped;
    report.skipped_flag =
        considered > 0 && report.users_skipped * 100 > considered;  // > 1%
    report.shortfall_flag = report.shortfall_evals > 0;
    return report;
}

// --- report serialization ------------------------------------------------------

inline nlohmann::json eval_config_to_json(const EvalConfig& config) {
    return nlohmann::json{{"min_clicks", config.min_clicks},
                          {"max_clicks", config.max_clicks},
                          {"test_tail", config.test_tail},
                          {"candidates_per_eval", config.candidates_per_eval},
                          {"distinct_sim_threshold", config.distinct_sim_threshold},
                          {"metric_cutoffs", config.metric_cutoffs},
                          {"rng_seed", config.rng_seed}};
}

inline EvalConfig eval_config_from_json(const nlohmann::json& j) {
    EvalConfig config;
    if (j.contains("min_clicks")) config.min_clicks = j.at("min_clicks").get<std::uint32_t>();
    if (j.contains("max_clicks")) config.max_clicks = j.at("max_clicks").get<std::uint32_t>();
    if (j.contains("test_tail")) config.test_tail = j.at("test_tail").get<std::uint32_t>();
    if (j.contains("candidates_per_eval"))
        config.candidates_per_eval = j.at("candidates_per_eval").get<std::uint32_t>();
    if (j.contains("distinct_sim_threshold"))
        config.distinct_sim_threshold = j.at("distinct_sim_threshold").get<double>();
    if (j.contains("metric_cutoffs"))
        config.metric_cutoffs = j.at("metric_cutoffs").get<std::vector<std::uint32_t>>();
    if (j.contains("rng_seed")) config.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return config;
}

/// Report as a single JSON document; `effective_config` is echoed verbatim so
/// every report carries the full configuration that produced it.
inline nlohmann::json report_to_json(const EvalReport& report,
                                     const nlohmann::json& effective_config) {
    nlohmann::json metrics;
    for (const auto& [n, value] : report.hr) metrics["hr"][std::to_string(n)] = value;
    for (const auto& [n, value] : report.ndcg) metrics["ndcg"][std::to_string(n)] = value;
    nlohmann::json per_user = nlohmann::json::array();
    for (const PerUserMetrics& u : report.per_user) {
        nlohmann::json ju{{"user_id", u.user_id}, {"evaluations", u.evaluations}};
        for (const auto& [n, value] : u.hr) ju["hr"][std::to_string(n)] = value;
        for (const auto& [n, value] : u.ndcg) ju["ndcg"][std::to_string(n)] = value;
        per_user.push_back(std::move(ju));
    }
    return nlohmann::json{{"system", report.system},
                          {"config", effective_config},
                          {"metrics", metrics},
                          {"users_evaluated", report.users_evaluated},
                          {"users_skipped", report.users_skipped},
                          {"excluded_short", report.excluded_short},
                          {"excluded_long", report.excluded_long},
                          {"evaluations", report.evaluations},
                          {"shortfall_evals", report.shortfall_evals},
                          {"corpus_items", report.corpus_items},
                          {"interactions", report.interactions},
                          {"cold_test_items", report.cold_test_items},
                          {"skipped_flag", report.skipped_flag},
                          {"shortfall_flag", report.shortfall_flag},
                          {"candidate_resampling", "per test item"},
                          {"per_user", std::move(per_user)}};
}

/// Table with one row per system and H@n/N@n columns, mirroring the usual
/// retrieval-benchmark layout.
inline std::string render_metrics_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    if (reports.empty()) return "";
    const auto& cutoffs = reports.front().config.metric_cutoffs;
    out << format_cell("system", 18);
    for (std::uint32_t n : cutoffs) {
        out << format_cell("H@" + std::to_string(n), 9);
        out << format_cell("N@" + std::to_string(n), 9);
    }
    out << '\n';
    for (const EvalReport& report : reports) {
        out << format_cell(report.system, 18);
        for (std::uint32_t n : cutoffs) {
            out << format_cell(format_metric(report.hr.count(n) ? report.hr.at(n) : 0.0), 9);
            out << format_cell(format_metric(report.ndcg.count(n) ? report.ndcg.at(n) : 0.0), 9);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace ira
