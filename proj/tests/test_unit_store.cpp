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
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/unit_store.hpp"

namespace {

std::vector<std::string> make_words(int n, const std::string& prefix) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%02d", prefix.c_str(), i);
        out.emplace_back(buf);
    }
    return out;
}

std::string join(const std::vector<std::string>& terms) {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::unique_ptr<ira::Embedder> vocab_embedder(std::vector<std::string> vocabulary) {
    ira::EmbedderConfig config;
    config.kind = ira::EmbedderKind::vocab;
    config.dimension = vocabulary.size();
    config.vocabulary = std::move(vocabulary);
    return ira::make_embedder(config);
}

ira::InterestUnit bare_unit(std::string unit_id, std::uint32_t size, std::int64_t last_update,
                            std::uint64_t seq) {
    ira::InterestUnit unit;
    unit.unit_id = std::move(unit_id);
    unit.features = ira::UnitFeatures{size, last_update};
    unit.created_seq = seq;
    return unit;
}

std::vector<std::string> unit_ids(const ira::UserProfile& profile) {
    std::vector<std::string> ids;
    for (const auto& unit : profile.units) ids.push_back(unit.unit_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& stem) {
        path = std::filesystem::temp_directory_path() /
               (stem + "-" + std::to_string(::getpid()) + ".jsonl");
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

}  // namespace

TEST_CASE("contextual text renders title, separator, and ranked terms") {
    ira::InterestUnit unit;
    unit.last_title = "solar panel roi";
    unit.term_counts = {{"solar", 3}, {"panel", 2}, {"cost", 1}, {"roi", 1}};
    ira::UnitConfig config;

    // Count-descending, ties alphabetical: solar(3) panel(2) cost(1) roi(1).
    CHECK(ira::contextual_text(unit, config) == "solar panel roi | solar panel cost roi");

    config.top_k_terms = 2;
    CHECK(ira::contextual_text(unit, config) == "solar panel roi | solar panel");

    config.top_k_terms = 10;
    CHECK(ira::contextual_text(unit, config, ira::TextMode::title_only) == "solar panel roi");
    CHECK(ira::contextual_text(unit, config, ira::TextMode::terms_only) ==
          "solar panel cost roi");

    ira::InterestUnit fresh;
    fresh.last_title = "solar panel roi";
    CHECK(ira::contextual_text(fresh, config) == "solar panel roi | ");
    CHECK(ira::contextual_text(fresh, config, ira::TextMode::terms_only).empty());
}

TEST_CASE("make_document extracts key terms from the title") {
    const auto doc = ira::make_document("d1", "tent tent stove, the best!", 42);
    CHECK(doc.doc_id == "d1");
    CHECK(doc.timestamp == 42);
    CHECK(doc.key_terms == ira::TermCounts{{"tent", 2}, {"stove", 1}, {"best", 1}});

    const ira::StopwordExtractor custom({"stove", "best"});
    const auto filtered = ira::make_document("d2", "tent tent stove, the best!", 43, custom);
    CHECK(filtered.key_terms == ira::TermCounts{{"tent", 2}, {"the", 1}});
}

TEST_CASE("unit config validation rejects degenerate values") {
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{0.0, 5, 10, 10}), ira::ConfigError);
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{1.0, 5, 10, 10}), ira::ConfigError);
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{-0.2, 5, 10, 10}), ira::ConfigError);
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{0.65, 0, 10, 10}), ira::ConfigError);
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{0.65, 5, 0, 10}), ira::ConfigError);
    CHECK_THROWS_AS(ira::make_profile("u", ira::UnitConfig{0.65, 5, 10, 0}), ira::ConfigError);
    CHECK_NOTHROW(ira::make_profile("u", ira::UnitConfig{}));
}

TEST_CASE("update_profile rejects an empty doc_id") {
    const auto embedder = vocab_embedder({"alpha"});
    auto profile = ira::make_profile("u1");
    ira::Document doc;
    doc.title = "alpha";
    CHECK_THROWS_AS(ira::update_profile(profile, doc, *embedder), ira::DataError);
}

// Fixture geometry: single-occurrence titles embed to 1/sqrt(n) per term, so
// two titles with o shared terms out of n each sit at cosine o/n. A unit that
// has absorbed exactly one click doubles every component (title + term list),
// which leaves its direction equal to the raw title's.
TEST_CASE("threshold decides merge versus create") {
    auto shared = make_words(9, "s");
    auto only_a = make_words(5, "a");
    auto only_b = make_words(5, "b");
    auto vocabulary = shared;
    vocabulary.insert(vocabulary.end(), only_a.begin(), only_a.end());
    vocabulary.insert(vocabulary.end(), only_b.begin(), only_b.end());
    const auto embedder = vocab_embedder(vocabulary);

    auto title_a = shared;
    title_a.insert(title_a.end(), only_a.begin(), only_a.end());
    auto title_b = shared;
    title_b.insert(title_b.end(), only_b.begin(), only_b.end());
    // 9 of 14 terms shared: cosine 9/14 = 0.642857...
    const double cosine = ira::similarity(embedder->embed(join(title_a)),
                                          embedder->embed(join(title_b)));
    CHECK_THAT(cosine, Catch::Matchers::WithinAbs(9.0 / 14.0, 1e-6));

    SECTION("below the default 0.65 threshold a new unit is created") {
        auto profile = ira::make_profile("u1", ira::UnitConfig{0.65, 5, 10, 20});
        const auto first =
            ira::update_profile(profile, ira::make_document("d1", join(title_a), 100), *embedder);
        CHECK(first.outcome == ira::UpdateOutcome::created);
        CHECK(first.unit_id == "u1:d1");

        const auto second =
            ira::update_profile(profile, ira::make_document("d2", join(title_b), 200), *embedder);
        CHECK(second.outcome == ira::UpdateOutcome::created);
        CHECK(second.unit_id == "u1:d2");
        REQUIRE(profile.units.size() == 2);
        CHECK(profile.units[0].created_seq == 0);
        CHECK(profile.units[1].created_seq == 1);
    }

    SECTION("the same pair merges once the threshold drops to 0.64") {
        auto profile = ira::make_profile("u1", ira::UnitConfig{0.64, 5, 10, 20});
        ira::update_profile(profile, ira::make_document("d1", join(title_a), 100), *embedder);
        const auto second =
            ira::update_profile(profile, ira::make_document("d2", join(title_b), 200), *embedder);
        CHECK(second.outcome == ira::UpdateOutcome::merged);
        CHECK(second.merged_units == 1);
        CHECK(second.unit_id == "u1:d1");  // oldest unit's identity survives
        REQUIRE(profile.units.size() == 1);

        const auto& unit = profile.units[0];
        CHECK(unit.last_title == join(title_b));
        CHECK(unit.member_doc_ids == std::vector<std::string>{"d1", "d2"});
        CHECK(unit.features.size == 2);
        CHECK(unit.features.last_update == 200);
        for (const auto& term : shared) CHECK(unit.term_counts.at(term) == 2);
        for (const auto& term : only_a) CHECK(unit.term_counts.at(term) == 1);
        for (const auto& term : only_b) CHECK(unit.term_counts.at(term) == 1);
    }
}

TEST_CASE("a bridging click collapses several units at once") {
    const auto embedder =
        vocab_embedder({"p0", "p1", "p2", "q0", "q1", "q2", "q3"});
    auto profile = ira::make_profile("u7", ira::UnitConfig{0.65, 5, 10, 20});

    ira::update_profile(profile, ira::make_document("d1", "p0 p1 p2", 10), *embedder);
    ira::update_profile(profile, ira::make_document("d2", "q0 q1 q2 q3", 20), *embedder);
    REQUIRE(profile.units.size() == 2);

    // Bridge: cosine 3/sqrt(21) = 0.6547 to the first unit, 4/sqrt(28) =
    // 0.7559 to the second. The second is closer, but the first is older, so
    // the first unit's identity survives the collapse.
    const auto result = ira::update_profile(
        profile, ira::make_document("d3", "p0 p1 p2 q0 q1 q2 q3", 30), *embedder);
    CHECK(result.outcome == ira::UpdateOutcome::merged);
    CHECK(result.merged_units == 2);
    CHECK(result.unit_id == "u7:d1");

    REQUIRE(profile.units.size() == 1);
    const auto& unit = profile.units[0];
    CHECK(unit.created_seq == 0);
    CHECK(unit.last_title == "p0 p1 p2 q0 q1 q2 q3");
    CHECK(unit.member_doc_ids == std::vector<std::string>{"d1", "d2", "d3"});
    CHECK(unit.features.size == 3);
    CHECK(unit.features.last_update == 30);
    for (const auto& [term, count] : unit.term_counts) CHECK(count == 2);
    CHECK(unit.term_counts.size() == 7);
    CHECK(profile.history == std::set<std::string>{"d1", "d2", "d3"});
    CHECK(unit.embedding == embedder->embed(ira::contextual_text(unit, profile.config)));
}

TEST_CASE("re-clicks bump recency; replays are inert") {
    const auto embedder = vocab_embedder({"alpine", "ridge", "trail", "updated"});
    auto profile = ira::make_profile("u1");
    ira::update_profile(profile, ira::make_document("d1", "alpine ridge trail", 100), *embedder);
    const auto baseline = profile;

    SECTION("strictly newer timestamp touches the absorbing unit") {
        const auto result = ira::update_profile(
            profile, ira::make_document("d1", "alpine ridge trail", 200), *embedder);
        CHECK(result.outcome == ira::UpdateOutcome::touched);
        CHECK(result.unit_id == "u1:d1");
        REQUIRE(profile.units.size() == 1);
        CHECK(profile.units[0].features.last_update == 200);
        CHECK(profile.units[0].features.size == 1);  // no second absorption
        CHECK(profile.history == baseline.history);
    }

    SECTION("a touch with an edited title refreshes [T] and the embedding") {
        const auto result = ira::update_profile(
            profile, ira::make_document("d1", "alpine ridge trail updated", 150), *embedder);
        CHECK(result.outcome == ira::UpdateOutcome::touched);
        const auto& unit = profile.units[0];
        CHECK(unit.last_title == "alpine ridge trail updated");
        CHECK(unit.term_counts == baseline.units[0].term_counts);  // [K] untouched
        CHECK(unit.embedding == embedder->embed(ira::contextual_text(unit, profile.config)));
    }

    SECTION("equal or older timestamps are duplicates, even with a new title") {
        for (std::int64_t ts : {100, 50}) {
            const auto result = ira::update_profile(
                profile, ira::make_document("d1", "alpine ridge trail updated", ts), *embedder);
            CHECK(result.outcome == ira::UpdateOutcome::duplicate);
            CHECK(result.unit_id == "u1:d1");
            CHECK(profile == baseline);
        }
    }
}

TEST_CASE("a re-click of a pruned document is a duplicate with no absorber") {
    const auto embedder = vocab_embedder({"alpha", "beta"});
    // keep_per_group = 1 and nothing reaches big, so the second unit evicts
    // the first.
    auto profile = ira::make_profile("u1", ira::UnitConfig{0.65, 99, 1, 10});
    ira::update_profile(profile, ira::make_document("d1", "alpha", 10), *embedder);
    ira::update_profile(profile, ira::make_document("d2", "beta", 20), *embedder);
    REQUIRE(profile.units.size() == 1);
    CHECK(profile.units[0].unit_id == "u1:d2");
    CHECK(profile.history.contains("d1"));

    const auto result =
        ira::update_profile(profile, ira::make_document("d1", "alpha", 30), *embedder);
    CHECK(result.outcome == ira::UpdateOutcome::duplicate);
    CHECK(result.unit_id.empty());
    CHECK(profile.units.size() == 1);  // no resurrection
}

TEST_CASE("default pruning keeps the freshest units per size group") {
    auto profile = ira::make_profile("u1", ira::UnitConfig{0.65, 3, 2, 10});
    profile.units.push_back(bare_unit("big-old", 4, 10, 0));
    profile.units.push_back(bare_unit("big-mid", 3, 20, 1));
    profile.units.push_back(bare_unit("small-old", 1, 5, 2));
    profile.units.push_back(bare_unit("big-new", 7, 30, 3));
    profile.units.push_back(bare_unit("small-mid", 2, 15, 4));
    profile.units.push_back(bare_unit("small-new", 1, 25, 5));

    ira::prune(profile);
    CHECK(unit_ids(profile) ==
          std::vector<std::string>{"big-mid", "big-new", "small-mid", "small-new"});
    // Relative (creation) order is preserved among survivors.
    CHECK(profile.units[0].unit_id == "big-mid");
    CHECK(profile.units[1].unit_id == "big-new");
    CHECK(profile.units[2].unit_id == "small-mid");
    CHECK(profile.units[3].unit_id == "small-new");
}

TEST_CASE("pruning ties on recency resolve by unit_id ascending") {
    auto profile = ira::make_profile("u1", ira::UnitConfig{0.65, 99, 1, 10});
    profile.units.push_back(bare_unit("sb", 1, 40, 0));
    profile.units.push_back(bare_unit("sa", 1, 40, 1));
    ira::prune(profile);
    REQUIRE(profile.units.size() == 1);
    CHECK(profile.units[0].unit_id == "sa");
}

TEST_CASE("prune overrides rank one combined list or disable pruning") {
    auto base = ira::make_profile("u1", ira::UnitConfig{0.65, 3, 2, 10});
    base.units.push_back(bare_unit("u-a", 9, 10, 0));   // largest, stalest
    base.units.push_back(bare_unit("u-b", 1, 40, 1));   // smallest, freshest
    base.units.push_back(bare_unit("u-c", 4, 30, 2));
    base.units.push_back(bare_unit("u-d", 4, 20, 3));

    SECTION("combined_recent keeps the globally freshest") {
        auto profile = base;
        profile.prune_override = ira::PruneOverride{
            ira::PruneOverride::Policy::combined_recent, 2};
        ira::prune(profile);
        CHECK(unit_ids(profile) == std::vector<std::string>{"u-b", "u-c"});
    }

    SECTION("combined_size keeps the globally largest, recency breaking ties") {
        auto profile = base;
        profile.prune_override = ira::PruneOverride{
            ira::PruneOverride::Policy::combined_size, 2};
        ira::prune(profile);
        CHECK(unit_ids(profile) == std::vector<std::string>{"u-a", "u-c"});
    }

    SECTION("none leaves every unit in place") {
        auto profile = base;
        profile.prune_override = ira::PruneOverride{ira::PruneOverride::Policy::none, 1};
        ira::prune(profile);
        CHECK(profile.units.size() == 4);
    }
}

TEST_CASE("text modes change the embedded text, not the bookkeeping") {
    const auto embedder = vocab_embedder({"alpine", "ridge", "trail", "camp"});
    for (ira::TextMode mode :
         {ira::TextMode::both, ira::TextMode::title_only, ira::TextMode::terms_only}) {
        auto profile = ira::make_profile("u1");
        profile.text_mode = mode;
        ira::update_profile(profile, ira::make_document("d1", "alpine ridge trail", 10),
                            *embedder);
        REQUIRE(profile.units.size() == 1);
        const auto& unit = profile.units[0];
        CHECK(unit.embedding ==
              embedder->embed(ira::contextual_text(unit, profile.config, mode)));
        CHECK(unit.last_title == "alpine ridge trail");
        CHECK(unit.term_counts.size() == 3);
    }
}

// Randomized exercise of the merge-or-create loop against an independently
// computed prediction, plus the structural invariants the rest of the stack
// relies on.
TEST_CASE("random click streams satisfy the update invariants") {
    const auto vocabulary = make_words(24, "w");
    const auto embedder = vocab_embedder(vocabulary);
    const ira::UnitConfig config{0.65, 3, 4, 10};
    ira::RandomSource root(20260501);

    for (int stream = 0; stream < 60; ++stream) {
        auto rng = root.fork(static_cast<std::uint64_t>(stream));
        auto profile = ira::make_profile("u", config);
        std::vector<ira::Document> events;
        std::vector<std::string> seen_ids;
        std::int64_t clock = 1000;

        for (int step = 0; step < 40; ++step) {
            ira::Document doc;
            if (!seen_ids.empty() && rng.next_bernoulli(0.25)) {
                // Re-click: same id and title, timestamp newer or stale.
                const auto& id = seen_ids[rng.next_below(seen_ids.size())];
                const auto it = std::find_if(events.begin(), events.end(),
                                             [&](const auto& e) { return e.doc_id == id; });
                doc = *it;
                doc.timestamp = rng.next_bernoulli(0.5) ? (clock += 10) : it->timestamp - 5;
            } else {
                const auto picks =
                    ira::sample_distinct(24, 3 + static_cast<std::uint32_t>(rng.next_below(4)),
                                         rng);
                std::vector<std::string> terms;
                for (auto p : picks) terms.push_back(vocabulary[p]);
                doc = ira::make_document("d" + std::to_string(step), join(terms), clock += 10);
                seen_ids.push_back(doc.doc_id);
            }
            events.push_back(doc);

            // Independent prediction from pre-update state.
            const auto title_embedding = embedder->embed(doc.title);
            ira::UpdateOutcome expected;
            std::size_t expected_merged = 0;
            if (profile.history.contains(doc.doc_id)) {
                expected = ira::UpdateOutcome::duplicate;
                for (const auto& unit : profile.units) {
                    const auto& m = unit.member_doc_ids;
                    if (std::find(m.begin(), m.end(), doc.doc_id) == m.end()) continue;
                    if (doc.timestamp > unit.features.last_update)
                        expected = ira::UpdateOutcome::touched;
                    break;
                }
            } else {
                for (const auto& unit : profile.units)
                    if (ira::similarity(title_embedding, unit.embedding) >= config.tau)
                        ++expected_merged;
                expected = expected_merged == 0 ? ira::UpdateOutcome::created
                                                : ira::UpdateOutcome::merged;
            }

            const auto result = ira::update_profile(profile, doc, *embedder);
            REQUIRE(result.outcome == expected);
            if (expected == ira::UpdateOutcome::merged)
                REQUIRE(result.merged_units == expected_merged);

            // Structural invariants.
            std::set<std::string> members;
            std::uint64_t prev_seq = 0;
            bool first = true;
            for (const auto& unit : profile.units) {
                if (!first) REQUIRE(unit.created_seq > prev_seq);
                prev_seq = unit.created_seq;
                first = false;
                REQUIRE(unit.features.size == unit.member_doc_ids.size());
                for (const auto& id : unit.member_doc_ids) {
                    REQUIRE(members.insert(id).second);  // absorbed exactly once
                    REQUIRE(profile.history.contains(id));
                }
                REQUIRE(unit.embedding ==
                        embedder->embed(ira::contextual_text(unit, config)));
            }
            REQUIRE(profile.units.size() <= 2 * config.keep_per_group);
        }

        // Replaying the identical stream reproduces the profile bit for bit.
        auto replayed = ira::make_profile("u", config);
        for (const auto& doc : events) ira::update_profile(replayed, doc, *embedder);
        REQUIRE(replayed == profile);

        // And the snapshot codec is lossless on whatever state arose.
        REQUIRE(ira::restore(ira::snapshot(profile)) == profile);
    }
}

TEST_CASE("snapshots round-trip profiles exactly") {
    const auto embedder = vocab_embedder(make_words(12, "w"));
    auto profile = ira::make_profile("user-42", ira::UnitConfig{0.7, 4, 6, 8});
    profile.text_mode = ira::TextMode::terms_only;
    profile.prune_override = ira::PruneOverride{ira::PruneOverride::Policy::combined_size, 3};
    ira::update_profile(profile, ira::make_document("d1", "w00 w01 w02", 100), *embedder);
    ira::update_profile(profile, ira::make_document("d2", "w00 w01 w03", 200), *embedder);
    ira::update_profile(profile, ira::make_document("d3", "w07 w08", 300), *embedder);

    const auto j = ira::snapshot(profile);
    CHECK(j.at("version").get<int>() == ira::kSnapshotVersion);
    CHECK(ira::restore(j) == profile);

    // Default mode and policy stay implicit in the serialized form.
    const auto plain = ira::snapshot(ira::make_profile("u"));
    CHECK(!plain.contains("text_mode"));
    CHECK(!plain.contains("prune_override"));
}

TEST_CASE("restore rejects unknown versions and malformed snapshots") {
    auto good = ira::snapshot(ira::make_profile("u"));

    auto wrong_version = good;
    wrong_version["version"] = ira::kSnapshotVersion + 1;
    CHECK_THROWS_AS(ira::restore(wrong_version), ira::VersionError);
    CHECK_THROWS_AS(ira::restore(wrong_version), ira::DataError);  // is-a

    auto missing = good;
    missing.erase("next_seq");
    CHECK_THROWS_MATCHES(ira::restore(missing), ira::DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("next_seq")));

    auto bad_type = good;
    bad_type["history"] = 7;
    CHECK_THROWS_AS(ira::restore(bad_type), ira::DataError);

    auto bad_mode = good;
    bad_mode["text_mode"] = "sideways";
    CHECK_THROWS_AS(ira::restore(bad_mode), ira::DataError);
}

TEST_CASE("snapshot files hold one profile per line, sorted by user") {
    const auto embedder = vocab_embedder(make_words(8, "w"));
    std::map<std::string, ira::UserProfile> profiles;
    for (const char* user : {"u-b", "u-a", "u-c"}) {
        auto profile = ira::make_profile(user);
        ira::update_profile(profile,
                            ira::make_document(std::string("d-") + user, "w00 w01", 10),
                            *embedder);
        profiles.emplace(user, std::move(profile));
    }

    TempFile file("ira-store-roundtrip");
    ira::write_snapshots(profiles, file.path);
    CHECK(ira::read_snapshots(file.path) == profiles);

    // Line order in the file follows user_id.
    std::ifstream in(file.path);
    std::string line;
    std::vector<std::string> order;
    while (std::getline(in, line))
        order.push_back(nlohmann::json::parse(line).at("user_id").get<std::string>());
    CHECK(order == std::vector<std::string>{"u-a", "u-b", "u-c"});
}

TEST_CASE("snapshot file errors carry line numbers") {
    TempFile file("ira-store-badfile");

    SECTION("missing file") {
        CHECK_THROWS_AS(ira::read_snapshots(file.path), ira::DataError);
    }

    SECTION("invalid JSON names the offending line") {
        std::ofstream out(file.path);
        out << ira::snapshot(ira::make_profile("u-a")) << '\n';
        out << "this is not json\n";
        out.close();
        CHECK_THROWS_MATCHES(ira::read_snapshots(file.path), ira::DataError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 2")));
    }

    SECTION("duplicate user ids are rejected") {
        std::ofstream out(file.path);
        out << ira::snapshot(ira::make_profile("u-a")) << '\n';
        out << ira::snapshot(ira::make_profile("u-a")) << '\n';
        out.close();
        CHECK_THROWS_MATCHES(ira::read_snapshots(file.path), ira::DataError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 2")));
    }
}

TEST_CASE("unit store isolates users and hands out copies") {
    const auto embedder = vocab_embedder(make_words(8, "w"));
    ira::UnitStore store(ira::UnitConfig{0.65, 3, 4, 10});

    CHECK(store.find("nobody") == std::nullopt);
    store.update("u2", ira::make_document("d1", "w00 w01", 10), *embedder);
    store.update("u1", ira::make_document("d2", "w02 w03", 20), *embedder);
    store.update("u1", ira::make_document("d3", "w04 w05", 30), *embedder);

    CHECK(store.size() == 2);
    CHECK(store.user_ids() == std::vector<std::string>{"u1", "u2"});
    REQUIRE(store.find("u1").has_value());
    CHECK(store.find("u1")->units.size() == 2);
    CHECK(store.find("u2")->units.size() == 1);

    // find() returns a copy, not a live reference.
    auto copy = *store.find("u1");
    copy.units.clear();
    CHECK(store.find("u1")->units.size() == 2);

    auto replacement = ira::make_profile("u2", store.config());
    store.put(replacement);
    CHECK(store.find("u2")->units.empty());

    SECTION("save and load reproduce every profile") {
        TempFile file("ira-store-persist");
        ira::save_snapshots(store, file.path);
        const auto loaded = ira::load_snapshots(file.path, store.config());
        CHECK(loaded.size() == store.size());
        for (const auto& id : store.user_ids()) CHECK(loaded.find(id) == store.find(id));
    }
}

TEST_CASE("concurrent updates to distinct users do not interleave state") {
    const auto vocabulary = make_words(24, "w");
    const auto embedder = vocab_embedder(vocabulary);
    ira::UnitStore store(ira::UnitConfig{0.65, 3, 50, 10});

    constexpr int kUsers = 4;
    constexpr int kEvents = 50;
    std::vector<std::thread> workers;
    for (int u = 0; u < kUsers; ++u) {
        workers.emplace_back([&, u] {
            auto rng = ira::RandomSource(777).fork(static_cast<std::uint64_t>(u));
            const std::string user = "user-" + std::to_string(u);
            for (int i = 0; i < kEvents; ++i) {
                const auto picks = ira::sample_distinct(24, 3, rng);
                const std::string title = vocabulary[picks[0]] + " " + vocabulary[picks[1]] +
                                          " " + vocabulary[picks[2]];
                store.update(user, ira::make_document("d" + std::to_string(i), title, i),
                             *embedder);
            }
        });
    }
    for (auto& w : workers) w.join();

    CHECK(store.size() == kUsers);
    for (int u = 0; u < kUsers; ++u) {
        const auto profile = store.find("user-" + std::to_string(u));
        REQUIRE(profile.has_value());
        CHECK(profile->history.size() == kEvents);

        // Sequential replay with the same stream gives the identical profile.
        auto rng = ira::RandomSource(777).fork(static_cast<std::uint64_t>(u));
        auto expected = ira::make_profile(profile->user_id, store.config());
        for (int i = 0; i < kEvents; ++i) {
            const auto picks = ira::sample_distinct(24, 3, rng);
            const std::string title = vocabulary[picks[0]] + " " + vocabulary[picks[1]] + " " +
                                      vocabulary[picks[2]];
            ira::update_profile(expected, ira::make_document("d" + std::to_string(i), title, i),
                                *embedder);
        }
        CHECK(*profile == expected);
    }
}
