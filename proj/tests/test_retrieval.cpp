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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/index.hpp"
#include "ira/retrieval.hpp"
#include "ira/unit_store.hpp"

namespace {

std::vector<std::string> make_words(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "w%02d", i);
        out.emplace_back(buf);
    }
    return out;
}

std::string random_title(const std::vector<std::string>& vocabulary, ira::RandomSource& rng) {
    const auto count = 2 + static_cast<std::uint32_t>(rng.next_below(4));
    const auto picks =
        ira::sample_distinct(static_cast<std::uint32_t>(vocabulary.size()), count, rng);
    std::string title;
    for (auto p : picks) {
        if (!title.empty()) title += ' ';
        title += vocabulary[p];
    }
    return title;
}

ira::EmbedderConfig vocab_config(std::vector<std::string> vocabulary) {
    ira::EmbedderConfig config;
    config.kind = ira::EmbedderKind::vocab;
    config.dimension = vocabulary.size();
    config.vocabulary = std::move(vocabulary);
    return config;
}

/// From-scratch reimplementation of personalized retrieval, sharing no code
/// with retrieve(): per-unit exhaustive top-n, id-union, member exclusion,
/// sum-of-similarity scoring, (score desc, doc_id asc) order, truncation.
ira::RankedResult naive_retrieve(const ira::UserProfile& profile,
                                 const std::vector<ira::Document>& corpus,
                                 const ira::Embedder& embedder,
                                 const ira::RetrievalConfig& config) {
    if (profile.units.empty() || corpus.empty()) return {};

    std::vector<std::pair<std::string, ira::EmbeddingVector>> embedded;
    for (const auto& doc : corpus) embedded.emplace_back(doc.doc_id, embedder.embed(doc.title));
    std::sort(embedded.begin(), embedded.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::set<std::string> candidates;
    for (const auto& unit : profile.units) {
        if (unit.embedding.is_zero()) continue;  // zero queries match nothing
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [id, vec] : embedded)
            ranked.emplace_back(ira::similarity(unit.embedding, vec), id);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first > b.first;  // stable keeps doc_id order inside ties
        });
        for (std::size_t i = 0; i < std::min<std::size_t>(config.per_unit_n, ranked.size()); ++i)
            candidates.insert(ranked[i].second);
    }

    std::set<std::string> clicked;
    for (const auto& unit : profile.units)
        for (const auto& id : unit.member_doc_ids) clicked.insert(id);

    ira::RankedResult result;
    for (const auto& [id, vec] : embedded) {
        if (!candidates.contains(id)) continue;
        if (config.exclude_clicked && clicked.contains(id)) continue;
        double score = 0.0;
        for (const auto& unit : profile.units) score += ira::similarity(vec, unit.embedding);
        result.push_back({id, score});
    }
    std::stable_sort(result.begin(), result.end(), [](const auto& a, const auto& b) {
        return a.score > b.score;  // stable keeps doc_id order inside ties
    });
    if (result.size() > config.max_results) result.resize(config.max_results);
    return result;
}

}  // namespace

TEST_CASE("retrieve matches a from-scratch implementation on random instances") {
    const auto vocabulary = make_words(26);
    const auto config = vocab_config(vocabulary);
    const auto embedder = ira::make_embedder(config);
    ira::RandomSource root(314159);

    for (int instance = 0; instance < 25; ++instance) {
        auto rng = root.fork(static_cast<std::uint64_t>(instance));

        const auto corpus_size = 80 + rng.next_below(120);
        std::vector<ira::Document> corpus;
        for (std::uint64_t i = 0; i < corpus_size; ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "c%04llu", static_cast<unsigned long long>(i));
            corpus.push_back(
                ira::make_document(id, random_title(vocabulary, rng),
                                   static_cast<std::int64_t>(i)));
        }
        const auto index = ira::build_index(corpus, config, ira::IndexMode::exact);

        auto profile = ira::make_profile("u", ira::UnitConfig{0.65, 3, 6, 10});
        const auto clicks = 5 + rng.next_below(26);
        for (std::uint64_t i = 0; i < clicks; ++i) {
            // Half the clicks land on corpus documents (exercises exclusion),
            // half on outside documents.
            std::string id;
            if (rng.next_bernoulli(0.5) && !corpus.empty()) {
                id = corpus[rng.next_below(corpus.size())].doc_id;
            } else {
                id = "x" + std::to_string(i);
            }
            ira::update_profile(
                profile,
                ira::make_document(id, random_title(vocabulary, rng),
                                   static_cast<std::int64_t>(1000 + i * 7)),
                *embedder);
        }

        for (std::uint32_t per_unit : {3u, 10u, static_cast<std::uint32_t>(corpus_size)}) {
            for (std::uint32_t max_results : {5u, 20u, 4000u}) {
                for (bool exclude : {true, false}) {
                    const ira::RetrievalConfig rc{per_unit, max_results, exclude};
                    const auto got = ira::retrieve(profile, index, rc);
                    const auto expected = naive_retrieve(profile, corpus, *embedder, rc);
                    REQUIRE(got == expected);  // ids, order, and exact scores
                }
            }
        }
    }
}

TEST_CASE("scores add the similarity of every unit, not just the closest") {
    const auto config = vocab_config({"p0", "p1", "q0", "q1"});
    const auto embedder = ira::make_embedder(config);
    auto profile = ira::make_profile("u");
    ira::update_profile(profile, ira::make_document("a1", "p0 p1", 10), *embedder);
    ira::update_profile(profile, ira::make_document("b1", "q0 q1", 20), *embedder);
    REQUIRE(profile.units.size() == 2);  // orthogonal titles stay apart

    const auto index = ira::build_index({ira::make_document("mix", "p0 p1 q0 q1", 0),
                                         ira::make_document("pure", "p0 p1", 0)},
                                        config, ira::IndexMode::exact);
    const auto result = ira::retrieve(profile, index, {10, 10, true});

    // "mix" sits at cos 1/sqrt(2) from BOTH units (sum 1.414); "pure" is a
    // perfect match for one unit only (sum 1.0). The summed rule puts the
    // document bridging both interests first.
    REQUIRE(result.size() == 2);
    CHECK(result[0].doc_id == "mix");
    CHECK_THAT(result[0].score, Catch::Matchers::WithinAbs(1.4142136, 1e-6));
    CHECK(result[1].doc_id == "pure");
    CHECK_THAT(result[1].score, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("clicked documents are excluded by unit membership") {
    const auto config = vocab_config({"p0", "p1"});
    const auto embedder = ira::make_embedder(config);
    const auto index = ira::build_index({ira::make_document("d1", "p0 p1", 0),
                                         ira::make_document("d2", "p0", 0)},
                                        config, ira::IndexMode::exact);

    auto profile = ira::make_profile("u");
    ira::update_profile(profile, ira::make_document("d1", "p0 p1", 10), *embedder);

    const auto excluded = ira::retrieve(profile, index, {10, 10, true});
    REQUIRE(excluded.size() == 1);
    CHECK(excluded[0].doc_id == "d2");

    const auto included = ira::retrieve(profile, index, {10, 10, false});
    REQUIRE(included.size() == 2);
    CHECK(included[0].doc_id == "d1");  // the clicked doc is its own best match

    SECTION("membership lost to pruning no longer excludes") {
        // keep_per_group = 1 and disjoint clicks: the unit holding d1 is
        // evicted, so d1 becomes retrievable again even with exclusion on.
        auto tight = ira::make_profile("u2", ira::UnitConfig{0.65, 99, 1, 10});
        ira::update_profile(tight, ira::make_document("d1", "p0 p1", 10), *embedder);
        ira::update_profile(tight, ira::make_document("e9", "q9", 20), *embedder);
        // "q9" is out of vocabulary: the surviving unit embeds to zero, so
        // give the profile a usable unit again via a fresh in-vocab click.
        ira::update_profile(tight, ira::make_document("e phone", "p0", 30), *embedder);
        const auto result = ira::retrieve(tight, index, {10, 10, true});
        std::vector<std::string> ids;
        for (const auto& item : result) ids.push_back(item.doc_id);
        CHECK(std::find(ids.begin(), ids.end(), "d1") != ids.end());
    }
}

TEST_CASE("ties rank by doc_id ascending") {
    const auto config = vocab_config({"p0", "p1"});
    const auto embedder = ira::make_embedder(config);
    const auto index = ira::build_index({ira::make_document("dz", "p0", 0),
                                         ira::make_document("da", "p0", 0),
                                         ira::make_document("dm", "p0", 0)},
                                        config, ira::IndexMode::exact);
    auto profile = ira::make_profile("u");
    ira::update_profile(profile, ira::make_document("click", "p0", 10), *embedder);

    const auto result = ira::retrieve(profile, index, {10, 10, true});
    REQUIRE(result.size() == 3);
    CHECK(result[0].doc_id == "da");
    CHECK(result[1].doc_id == "dm");
    CHECK(result[2].doc_id == "dz");
    CHECK(result[0].score == result[2].score);
}

TEST_CASE("narrow per-unit depth caps the candidate pool") {
    const auto config = vocab_config({"p0", "p1", "q0", "q1"});
    const auto embedder = ira::make_embedder(config);
    std::vector<ira::Document> corpus;
    for (int i = 0; i < 6; ++i)
        corpus.push_back(ira::make_document("p" + std::to_string(i) + "doc",
                                            i % 2 ? "p0 p1" : "p0", i));
    for (int i = 0; i < 6; ++i)
        corpus.push_back(ira::make_document("q" + std::to_string(i) + "doc",
                                            i % 2 ? "q0 q1" : "q1", i));
    const auto index = ira::build_index(corpus, config, ira::IndexMode::exact);

    auto profile = ira::make_profile("u");
    ira::update_profile(profile, ira::make_document("a", "p0 p1", 10), *embedder);
    ira::update_profile(profile, ira::make_document("b", "q0 q1", 20), *embedder);
    REQUIRE(profile.units.size() == 2);

    // Two units, one candidate each: at most two results regardless of
    // max_results.
    const auto result = ira::retrieve(profile, index, {1, 100, true});
    CHECK(result.size() == 2);
}

TEST_CASE("retrieval edge cases and validation") {
    const auto config = vocab_config({"p0", "p1"});
    const auto embedder = ira::make_embedder(config);
    const auto index = ira::build_index({ira::make_document("d1", "p0", 0)}, config,
                                        ira::IndexMode::exact);

    SECTION("empty profile retrieves nothing") {
        const auto profile = ira::make_profile("u");
        CHECK(ira::retrieve(profile, index, {}).empty());
    }

    SECTION("empty index retrieves nothing") {
        auto profile = ira::make_profile("u");
        ira::update_profile(profile, ira::make_document("c", "p0", 1), *embedder);
        const auto empty = ira::build_index({}, config, ira::IndexMode::exact);
        CHECK(ira::retrieve(profile, empty, {}).empty());
    }

    SECTION("a profile whose only unit embeds to zero matches nothing") {
        auto profile = ira::make_profile("u");
        ira::update_profile(profile, ira::make_document("c", "offvocab words", 1), *embedder);
        REQUIRE(profile.units.size() == 1);
        REQUIRE(profile.units[0].embedding.is_zero());
        CHECK(ira::retrieve(profile, index, {}).empty());
    }

    SECTION("config validation") {
        const auto profile = ira::make_profile("u");
        CHECK_THROWS_AS(ira::retrieve(profile, index, {0, 10, true}), ira::ConfigError);
        CHECK_THROWS_AS(ira::retrieve(profile, index, {10, 0, true}), ira::ConfigError);
    }

    SECTION("profile and index from different embedders are rejected") {
        ira::EmbedderConfig other;
        other.kind = ira::EmbedderKind::hashed;
        other.dimension = 16;
        const auto other_embedder = ira::make_embedder(other);
        auto profile = ira::make_profile("u");
        ira::update_profile(profile, ira::make_document("c", "p0", 1), *other_embedder);
        CHECK_THROWS_AS(ira::retrieve(profile, index, {}), ira::MismatchError);
    }
}

TEST_CASE("score_document sums similarities and handles empty profiles") {
    const auto config = vocab_config({"p0", "p1", "q0", "q1"});
    const auto embedder = ira::make_embedder(config);
    auto profile = ira::make_profile("u");
    CHECK(ira::score_document(embedder->embed("p0"), profile) == 0.0);

    ira::update_profile(profile, ira::make_document("a", "p0 p1", 10), *embedder);
    ira::update_profile(profile, ira::make_document("b", "q0 q1", 20), *embedder);
    const auto doc = embedder->embed("p0 p1 q0 q1");
    CHECK_THAT(ira::score_document(doc, profile),
               Catch::Matchers::WithinAbs(1.4142136, 1e-6));
}
