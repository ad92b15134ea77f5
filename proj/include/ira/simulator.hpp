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
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/io.hpp"
#include "ira/unit_store.hpp"

namespace ira {

/// Entering period `period`, each user independently swaps one active
/// interest for a fresh topic with the given probability.
struct DriftEvent {
    std::size_t period = 1;
    double probability = 0.5;

    bool operator==(const DriftEvent&) const = default;
};

/// Synthetic click-stream generator configuration. Topic vocabularies are
/// generated disjoint; every title is a token bag whose pairwise cosines are
/// controlled by construction:
///   clean doc   = 6 topic cores + 2 stopword cores + 2 subtopic anchors + 2 tails
///   vague doc   = 5 topic cores + 2 stopword cores + 2 subtopic anchors + 3 noise
///   family doc  = 2 topic cores + 2 subtopic anchors + 4 family terms (doubled)
/// Stopword cores appear in titles (so title embeddings see them) but are
/// dropped by key-term extraction — the channel that differentiates [T]
/// from [K]. Vague docs poison a unit's [T] when absorbed; family docs form
/// short-lived junk units ("transient bursts").
struct SimConfig {
    std::uint32_t num_users = 500;
    std::uint32_t num_topics = 8;

    // Vocabulary shape (per topic unless noted). The tail pool is wide and
    // tails_per_doc heavy on purpose: two same-subtopic titles overlap on
    // cores+anchors but rarely on tails, so title-to-title cosine straddles
    // the merge threshold while an accumulated term profile (whose counts
    // concentrate on cores and anchors) stays safely above it.
    std::uint32_t core_terms = 6;
    std::uint32_t stop_terms = 1;
    std::uint32_t subtopics = 4;
    std::uint32_t anchors_per_subtopic = 2;
    std::uint32_t tail_terms = 42;
    std::uint32_t tails_per_doc = 7;      // per clean doc, sampled from the tail pool
    std::uint32_t vague_core_drop = 1;    // cores a vague doc loses
    std::uint32_t vague_noise_tokens = 3; // noise tokens a vague doc gains
    std::uint32_t noise_terms = 40;   // global pool
    std::uint32_t num_families = 24;  // global transient-burst families
    std::uint32_t family_terms = 4;   // per family

    // corpus shape, per (period, topic, subtopic) cell
    std::uint32_t clean_docs_per_cell = 8;
    std::uint32_t vague_docs_per_cell = 2;
    std::uint32_t docs_per_family = 12;

    // Never-clicked long-tail documents with vocabulary disjoint from every
    // topic. They dilute the sampled candidate pools the way a real corpus's
    // tail would; without them almost every candidate belongs to one of the
    // user's other live interests and HR stops measuring interest coverage.
    std::uint32_t background_groups = 160;
    std::uint32_t background_docs_per_group = 120;
    std::uint32_t background_fixed_terms = 10;
    std::uint32_t background_extra_terms = 4;

    // user behavior
    std::uint32_t interests_min = 3;
    std::uint32_t interests_max = 3;
    std::vector<std::string> periods = {"A", "B", "C"};
    std::vector<std::uint32_t> clicks_per_user_per_period = {70, 80, 20};
    std::vector<DriftEvent> drift = {{1, 0.5}};
    std::uint32_t session_min = 3;  // clicks per sticky (topic, subtopic) run
    std::uint32_t session_max = 4;
    double preferred_sub_bias = 0.75;  // chance a session lands on the user's favorite subtopic
    double burst_probability = 0.3;  // transient burst before a session
    std::uint32_t burst_length = 4;
    bool bursts_in_last_period = false;  // keep the test window on stable interests
    bool dormancy = true;                // one kept interest is silent mid-periods
    std::uint32_t emerging_clicks = 3;   // brand-new interest at the end of period N-2
    std::uint64_t rng_seed = 1;

    bool operator==(const SimConfig&) const = default;
};

struct UserTruth {
    std::string user_id;
    std::vector<std::uint32_t> interests_a;  // initial interests, sorted
    std::optional<std::uint32_t> dormant;
    std::optional<std::uint32_t> drifted_out;
    std::optional<std::uint32_t> drifted_in;
    std::optional<std::uint32_t> emerging;
    std::vector<std::vector<std::uint32_t>> active_topics;  // per period, sorted

    bool operator==(const UserTruth&) const = default;
};

struct SimOutput {
    std::vector<Document> corpus;  // key_terms left empty; derived at ingest
    std::vector<std::vector<ClickEvent>> clicks_by_period;
    std::vector<UserTruth> truth;
    std::vector<std::string> vocabulary;  // for collision-free vocab embedders
    std::vector<std::int64_t> period_starts;

    std::vector<ClickEvent> all_clicks() const {
        std::vector<ClickEvent> all;
        for (const auto& period : clicks_by_period)
            all.insert(all.end(), period.begin(), period.end());
        return all;
    }
};

inline void validate(const SimConfig& c) {
    if (c.num_users == 0 || c.num_topics == 0) throw ConfigError("simulator: users/topics empty");
    if (c.interests_min == 0 || c.interests_min > c.interests_max)
        throw ConfigError("simulator: bad interests range");
    // Drift target + emerging interest must have fresh topics available.
    if (c.num_topics < c.interests_max + 2)
        throw ConfigError("simulator: num_topics must exceed interests_max by at least 2");
    if (c.periods.empty() || c.periods.size() != c.clicks_per_user_per_period.size())
        throw ConfigError("simulator: periods and clicks_per_user_per_period must align");
    for (const auto& event : c.drift) {
        if (event.probability < 0.0 || event.probability > 1.0)
            throw ConfigError("simulator: drift probability outside [0,1]");
        if (event.period == 0 || event.period >= c.periods.size())
            throw ConfigError("simulator: drift period out of range");
    }
    if (c.burst_probability < 0.0 || c.burst_probability > 1.0)
        throw ConfigError("simulator: burst probability outside [0,1]");
    if (c.core_terms < 2 || c.subtopics == 0 || c.anchors_per_subtopic == 0 ||
        c.clean_docs_per_cell == 0)
        throw ConfigError("simulator: degenerate vocabulary/corpus shape");
    if (c.tails_per_doc > c.tail_terms)
        throw ConfigError("simulator: tails_per_doc exceeds the tail pool");
    if (c.vague_core_drop >= c.core_terms)
        throw ConfigError("simulator: vague docs would lose every core term");
    if (c.vague_docs_per_cell > 0 && c.noise_terms < c.vague_noise_tokens)
        throw ConfigError("simulator: vague docs need at least vague_noise_tokens noise terms");
    if (c.burst_probability > 0.0 &&
        (c.num_families == 0 || c.docs_per_family < c.burst_length))
        throw ConfigError("simulator: bursts need families with at least burst_length docs");
    if (c.session_min == 0 || c.session_min > c.session_max)
        throw ConfigError("simulator: bad session length range");
    if (c.preferred_sub_bias < 0.0 || c.preferred_sub_bias > 1.0)
        throw ConfigError("simulator: preferred_sub_bias outside [0,1]");
    for (std::size_t p = 0; p < c.clicks_per_user_per_period.size(); ++p) {
        if (c.clicks_per_user_per_period[p] == 0)
            throw ConfigError("simulator: zero clicks in period " + c.periods[p]);
    }
    if (c.periods.size() >= 3 && c.emerging_clicks > 0) {
        const std::size_t ep = c.periods.size() - 2;
        if (c.clicks_per_user_per_period[ep] <= c.emerging_clicks)
            throw ConfigError("simulator: emerging_clicks exceed the emerging period budget");
        if (c.emerging_clicks > c.clean_docs_per_cell)
            throw ConfigError("simulator: emerging_clicks exceed clean docs per cell");
    }
    if (c.background_groups > 0 && c.background_docs_per_group > 0) {
        if (c.background_fixed_terms < 2)
            throw ConfigError("simulator: background docs need at least 2 fixed terms");
        if (c.background_extra_terms > 0 && c.background_extra_terms < 2)
            throw ConfigError("simulator: background extras need at least 2 terms to sample");
    }
}

namespace detail {

// Stopword-core pool: real stopwords, so key-term extraction drops them
// while title embeddings keep them. All entries must stay in
// default_stopwords() (unit-tested).
inline constexpr std::array<const char*, 16> kStopCorePool = {
    "about", "after", "could", "their", "there", "which", "would", "them",
    "then",  "when",  "what",  "were",  "will",  "with",  "your",  "have",
};

inline std::string pad(std::uint32_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace detail

/// Term-name builders. Prefixes are chosen so families < noise < topic terms
/// lexicographically, which pins down top-term tie-breaks in tests.
struct SimVocab {
    const SimConfig& config;

    std::string core(std::uint32_t t, std::uint32_t i) const {
        return "t" + detail::pad(t, 2) + "core" + std::to_string(i);
    }
    std::string stop_core(std::uint32_t t, std::uint32_t j) const {
        return detail::kStopCorePool[(t * config.stop_terms + j) %
                                     detail::kStopCorePool.size()];
    }
    std::string sub_anchor(std::uint32_t t, std::uint32_t s, std::uint32_t a) const {
        return "t" + detail::pad(t, 2) + "sub" + std::to_string(s) + "x" + std::to_string(a);
    }
    std::string tail(std::uint32_t t, std::uint32_t i) const {
        return "t" + detail::pad(t, 2) + "tail" + std::to_string(i);
    }
    std::string noise(std::uint32_t i) const { return "noise" + detail::pad(i, 2); }
    std::string family(std::uint32_t f, std::uint32_t i) const {
        return "fam" + detail::pad(f, 2) + "x" + std::to_string(i);
    }
    std::string background(std::uint32_t g, std::uint32_t i) const {
        return "bg" + detail::pad(g, 2) + "w" + detail::pad(i, 2);
    }

    std::vector<std::string> all_terms() const {
        std::vector<std::string> terms;
        std::unordered_map<std::string, bool> seen;
        auto add = [&](std::string term) {
            if (!seen.emplace(term, true).second) return;
            terms.push_back(std::move(term));
        };
        for (std::uint32_t t = 0; t < config.num_topics; ++t) {
            for (std::uint32_t i = 0; i < config.core_terms; ++i) add(core(t, i));
            for (std::uint32_t j = 0; j < config.stop_terms; ++j) add(stop_core(t, j));
            for (std::uint32_t s = 0; s < config.subtopics; ++s)
                for (std::uint32_t a = 0; a < config.anchors_per_subtopic; ++a)
                    add(sub_anchor(t, s, a));
            for (std::uint32_t i = 0; i < config.tail_terms; ++i) add(tail(t, i));
        }
        for (std::uint32_t i = 0; i < config.noise_terms; ++i) add(noise(i));
        for (std::uint32_t f = 0; f < config.num_families; ++f)
            for (std::uint32_t i = 0; i < config.family_terms; ++i) add(family(f, i));
        for (std::uint32_t g = 0; g < config.background_groups; ++g) {
            const auto per_group = config.background_fixed_terms + config.background_extra_terms;
            for (std::uint32_t i = 0; i < per_group; ++i) add(background(g, i));
        }
        return terms;
    }
};

/// Topic index encoded in a generated doc_id, or nullopt for family docs.
inline std::optional<std::uint32_t> topic_of_doc(const std::string& doc_id) {
    // "p{p}-t{tt}-s{s}-d{ii}"
    if (doc_id.size() < 7 || doc_id[0] != 'p' || doc_id[2] != '-' || doc_id[3] != 't')
        return std::nullopt;
    return static_cast<std::uint32_t>((doc_id[4] - '0') * 10 + (doc_id[5] - '0'));
}

inline bool is_transient_doc(const std::string& doc_id) {
    return doc_id.rfind("fam", 0) == 0;
}

inline bool is_background_doc(const std::string& doc_id) {
    return doc_id.rfind("bg", 0) == 0;
}

inline SimOutput generate(const SimConfig& config) {
    validate(config);
    const SimVocab vocab{config};
    RandomSource root(config.rng_seed);

    SimOutput out;
    out.vocabulary = vocab.all_terms();

    constexpr std::int64_t kBase = 1'600'000'000'000;  // epoch ms
    constexpr std::int64_t kPeriodMs = 2'592'000'000;  // 30 days
    const std::size_t num_periods = config.periods.size();
    for (std::size_t p = 0; p < num_periods; ++p)
        out.period_starts.push_back(kBase + static_cast<std::int64_t>(p) * kPeriodMs);

    // --- corpus -------------------------------------------------------------
    const std::uint32_t docs_per_cell = config.clean_docs_per_cell + config.vague_docs_per_cell;
    // cell_docs[p][t][s] -> corpus slots
    std::vector<std::vector<std::vector<std::vector<std::uint32_t>>>> cell_docs(
        num_periods,
        std::vector<std::vector<std::vector<std::uint32_t>>>(
            config.num_topics, std::vector<std::vector<std::uint32_t>>(config.subtopics)));
    std::vector<std::vector<std::uint32_t>> family_docs(config.num_families);

    auto join = [](const std::vector<std::string>& tokens) {
        std::string title;
        for (const auto& tok : tokens) {
            if (!title.empty()) title += ' ';
            title += tok;
        }
        return title;
    };

    for (std::size_t p = 0; p < num_periods; ++p) {
        for (std::uint32_t t = 0; t < config.num_topics; ++t) {
            for (std::uint32_t s = 0; s < config.subtopics; ++s) {
                RandomSource rng = root.fork(fnv1a64("corpus"))
                                       .fork(p)
                                       .fork(t)
                                       .fork(s);
                for (std::uint32_t i = 0; i < docs_per_cell; ++i) {
                    const bool vague = i >= config.clean_docs_per_cell;
                    std::vector<std::string> tokens;
                    if (vague) {
                        auto dropped =
                            sample_distinct(config.core_terms, config.vague_core_drop, rng);
                        std::sort(dropped.begin(), dropped.end());
                        for (std::uint32_t c = 0; c < config.core_terms; ++c)
                            if (!std::binary_search(dropped.begin(), dropped.end(), c))
                                tokens.push_back(vocab.core(t, c));
                    } else {
                        for (std::uint32_t c = 0; c < config.core_terms; ++c)
                            tokens.push_back(vocab.core(t, c));
                    }
                    for (std::uint32_t j = 0; j < config.stop_terms; ++j)
                        tokens.push_back(vocab.stop_core(t, j));
                    for (std::uint32_t a = 0; a < config.anchors_per_subtopic; ++a)
                        tokens.push_back(vocab.sub_anchor(t, s, a));
                    if (vague) {
                        for (std::uint32_t n :
                             sample_distinct(config.noise_terms, config.vague_noise_tokens, rng))
                            tokens.push_back(vocab.noise(n));
                    } else {
                        for (std::uint32_t n :
                             sample_distinct(config.tail_terms, config.tails_per_doc, rng))
                            tokens.push_back(vocab.tail(t, n));
                    }
                    Document doc;
                    doc.doc_id = "p" + std::to_string(p) + "-t" + detail::pad(t, 2) + "-s" +
                                 std::to_string(s) + "-d" + detail::pad(i, 2);
                    doc.title = join(tokens);
                    doc.timestamp =
                        out.period_starts[p] +
                        static_cast<std::int64_t>(cell_docs[p][t][s].size()) +
                        static_cast<std::int64_t>((t * config.subtopics + s) * docs_per_cell);
                    cell_docs[p][t][s].push_back(static_cast<std::uint32_t>(out.corpus.size()));
                    out.corpus.push_back(std::move(doc));
                }
            }
        }
    }
    for (std::uint32_t f = 0; f < config.num_families; ++f) {
        RandomSource rng = root.fork(fnv1a64("family")).fork(f);
        const auto topic = static_cast<std::uint32_t>(rng.next_below(config.num_topics));
        const auto sub = static_cast<std::uint32_t>(rng.next_below(config.subtopics));
        for (std::uint32_t i = 0; i < config.docs_per_family; ++i) {
            std::vector<std::string> tokens;
            for (std::uint32_t c : sample_distinct(config.core_terms, 2, rng))
                tokens.push_back(vocab.core(topic, c));
            for (std::uint32_t a = 0; a < config.anchors_per_subtopic; ++a)
                tokens.push_back(vocab.sub_anchor(topic, sub, a));
            for (std::uint32_t x = 0; x < config.family_terms; ++x) {
                tokens.push_back(vocab.family(f, x));
                tokens.push_back(vocab.family(f, x));  // doubled: family terms dominate
            }
            Document doc;
            doc.doc_id = "fam" + detail::pad(f, 2) + "-d" + detail::pad(i, 2);
            doc.title = join(tokens);
            doc.timestamp = kBase + f * config.docs_per_family + i;
            family_docs[f].push_back(static_cast<std::uint32_t>(out.corpus.size()));
            out.corpus.push_back(std::move(doc));
        }
    }
    for (std::uint32_t g = 0; g < config.background_groups; ++g) {
        RandomSource rng = root.fork(fnv1a64("background")).fork(g);
        for (std::uint32_t i = 0; i < config.background_docs_per_group; ++i) {
            std::vector<std::string> tokens;
            for (std::uint32_t w = 0; w < config.background_fixed_terms; ++w)
                tokens.push_back(vocab.background(g, w));
            if (config.background_extra_terms >= 2) {
                for (std::uint32_t e : sample_distinct(config.background_extra_terms, 2, rng))
                    tokens.push_back(vocab.background(g, config.background_fixed_terms + e));
            }
            Document doc;
            doc.doc_id = "bg" + detail::pad(g, 2) + "-d" + detail::pad(i, 3);
            doc.title = join(tokens);
            doc.timestamp = kBase + g * config.background_docs_per_group + i;
            out.corpus.push_back(std::move(doc));
        }
    }

    // --- users ---------------------------------------------------------------
    out.clicks_by_period.resize(num_periods);
    const std::size_t emerging_period = num_periods >= 3 ? num_periods - 2 : num_periods;
    const bool has_emerging = config.emerging_clicks > 0 && num_periods >= 3;

    for (std::uint32_t u = 0; u < config.num_users; ++u) {
        RandomSource rng = root.fork(fnv1a64("user")).fork(u);
        UserTruth truth;
        truth.user_id = "u" + detail::pad(u, 4);

        const auto k = config.interests_min +
                       static_cast<std::uint32_t>(rng.next_below(
                           config.interests_max - config.interests_min + 1));
        truth.interests_a = sample_distinct(config.num_topics, k, rng);
        std::sort(truth.interests_a.begin(), truth.interests_a.end());

        std::vector<std::uint32_t> taken = truth.interests_a;
        auto pick_fresh_topic = [&]() {
            for (;;) {
                const auto t = static_cast<std::uint32_t>(rng.next_below(config.num_topics));
                if (std::find(taken.begin(), taken.end(), t) == taken.end()) {
                    taken.push_back(t);
                    return t;
                }
            }
        };
        if (has_emerging) truth.emerging = pick_fresh_topic();
        if (config.dormancy && num_periods >= 3)
            truth.dormant = truth.interests_a[rng.next_below(truth.interests_a.size())];

        // Interests active per period, applying drift at boundaries.
        std::vector<std::uint32_t> current = truth.interests_a;
        std::vector<std::vector<std::uint32_t>> interests_per_period;
        for (std::size_t p = 0; p < num_periods; ++p) {
            for (const DriftEvent& event : config.drift) {
                if (event.period != p) continue;
                if (!rng.next_bernoulli(event.probability)) continue;
                std::vector<std::uint32_t> swappable;
                for (std::uint32_t t : current)
                    if (!truth.dormant || t != *truth.dormant) swappable.push_back(t);
                if (swappable.empty()) continue;
                const auto out_topic = swappable[rng.next_below(swappable.size())];
                const auto in_topic = pick_fresh_topic();
                std::erase(current, out_topic);
                current.push_back(in_topic);
                std::sort(current.begin(), current.end());
                truth.drifted_out = out_topic;
                truth.drifted_in = in_topic;
            }
            interests_per_period.push_back(current);
        }

        // Ground-truth active sets (what the user can click, minus bursts).
        for (std::size_t p = 0; p < num_periods; ++p) {
            std::vector<std::uint32_t> active = interests_per_period[p];
            const bool middle = p > 0 && p + 1 < num_periods;
            if (truth.dormant && middle) std::erase(active, *truth.dormant);
            if (has_emerging && truth.emerging &&
                (p == emerging_period || p > emerging_period)) {
                active.push_back(*truth.emerging);
            }
            std::sort(active.begin(), active.end());
            truth.active_topics.push_back(active);
        }

        // Each user favors one subtopic per topic; sessions cluster there.
        std::vector<std::uint32_t> preferred_sub(config.num_topics);
        for (auto& s : preferred_sub)
            s = static_cast<std::uint32_t>(rng.next_below(config.subtopics));

        // Click streams.
        for (std::size_t p = 0; p < num_periods; ++p) {
            RandomSource crng = rng.fork(5000 + p);
            const std::uint32_t budget = config.clicks_per_user_per_period[p];
            const std::uint32_t tail =
                (has_emerging && p == emerging_period) ? config.emerging_clicks : 0;
            const std::uint32_t regular = budget - tail;

            std::vector<std::uint32_t> pool = truth.active_topics[p];
            if (tail > 0 && truth.emerging) std::erase(pool, *truth.emerging);
            if (pool.empty()) pool = interests_per_period[p];

            const bool bursts_ok =
                config.burst_probability > 0.0 &&
                (p + 1 < num_periods || config.bursts_in_last_period);

            std::vector<std::uint32_t> picks;  // corpus slots
            while (picks.size() < regular) {
                if (bursts_ok && crng.next_bernoulli(config.burst_probability)) {
                    const auto f =
                        static_cast<std::uint32_t>(crng.next_below(config.num_families));
                    for (std::uint32_t j :
                         sample_distinct(config.docs_per_family, config.burst_length, crng)) {
                        if (picks.size() >= regular) break;
                        picks.push_back(family_docs[f][j]);
                    }
                    if (picks.size() >= regular) break;
                }
                const auto topic = pool[crng.next_below(pool.size())];
                const auto sub = crng.next_bernoulli(config.preferred_sub_bias)
                                     ? preferred_sub[topic]
                                     : static_cast<std::uint32_t>(
                                           crng.next_below(config.subtopics));
                const auto len = config.session_min +
                                 static_cast<std::uint32_t>(crng.next_below(
                                     config.session_max - config.session_min + 1));
                const auto& cell = cell_docs[p][topic][sub];
                for (std::uint32_t c = 0; c < len && picks.size() < regular; ++c)
                    picks.push_back(cell[crng.next_below(cell.size())]);
            }
            if (tail > 0 && truth.emerging) {
                const auto sub = preferred_sub[*truth.emerging];
                for (std::uint32_t j :
                     sample_distinct(config.clean_docs_per_cell, tail, crng)) {
                    picks.push_back(cell_docs[p][*truth.emerging][sub][j]);
                }
            }

            for (std::size_t step = 0; step < picks.size(); ++step) {
                const Document& doc = out.corpus[picks[step]];
                ClickEvent click;
                click.user_id = truth.user_id;
                click.doc_id = doc.doc_id;
                click.title = doc.title;
                click.timestamp =
                    out.period_starts[p] + static_cast<std::int64_t>(step + 1) * 60'000;
                out.clicks_by_period[p].push_back(std::move(click));
            }
        }
        out.truth.push_back(std::move(truth));
    }
    return out;
}

/// Embedder config covering the generator's whole vocabulary (collision-free).
inline EmbedderConfig sim_embedder_config(const SimOutput& output) {
    EmbedderConfig config;
    config.kind = EmbedderKind::vocab;
    config.vocabulary = output.vocabulary;
    config.dimension = config.vocabulary.size();
    return config;
}

// --- ground-truth JSONL -------------------------------------------------------

inline void write_ground_truth(const std::vector<UserTruth>& truth,
                               const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    for (const auto& t : truth) {
        nlohmann::json j{{"user_id", t.user_id},
                         {"interests_a", t.interests_a},
                         {"active_topics", t.active_topics}};
        j["dormant"] = t.dormant ? nlohmann::json(*t.dormant) : nlohmann::json(nullptr);
        j["drifted_out"] =
            t.drifted_out ? nlohmann::json(*t.drifted_out) : nlohmann::json(nullptr);
        j["drifted_in"] = t.drifted_in ? nlohmann::json(*t.drifted_in) : nlohmann::json(nullptr);
        j["emerging"] = t.emerging ? nlohmann::json(*t.emerging) : nlohmann::json(nullptr);
        out << j << '\n';
    }
}

inline std::vector<UserTruth> read_ground_truth(const std::filesystem::path& path) {
    std::vector<UserTruth> truth;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        UserTruth t;
        t.user_id = detail::require(j, "user_id", "ground truth").get<std::string>();
        t.interests_a =
            detail::require(j, "interests_a", "ground truth").get<std::vector<std::uint32_t>>();
        t.active_topics = detail::require(j, "active_topics", "ground truth")
                              .get<std::vector<std::vector<std::uint32_t>>>();
        auto opt = [&](const char* key) -> std::optional<std::uint32_t> {
            const auto& v = detail::require(j, key, "ground truth");
            if (v.is_null()) return std::nullopt;
            return v.get<std::uint32_t>();
        };
        t.dormant = opt("dormant");
        t.drifted_out = opt("drifted_out");
        t.drifted_in = opt("drifted_in");
        t.emerging = opt("emerging");
        truth.push_back(std::move(t));
    });
    return truth;
}

}  // namespace ira
