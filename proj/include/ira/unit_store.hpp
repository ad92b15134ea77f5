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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/keyterm.hpp"

namespace ira {

struct Document {
    std::string doc_id;
    std::string title;
    std::int64_t timestamp = 0;  // epoch milliseconds
    TermCounts key_terms;        // derived at ingest

    bool operator==(const Document&) const = default;
};

inline Document make_document(std::string doc_id, std::string title, std::int64_t timestamp,
                              const KeyTermExtractor& extractor) {
    Document doc{std::move(doc_id), std::move(title), timestamp, {}};
    doc.key_terms = extract_key_terms(doc.title, extractor);
    return doc;
}

inline Document make_document(std::string doc_id, std::string title, std::int64_t timestamp) {
    Document doc{std::move(doc_id), std::move(title), timestamp, {}};
    doc.key_terms = extract_key_terms(doc.title);
    return doc;
}

struct UnitFeatures {
    std::uint32_t size = 0;        // member document count
    std::int64_t last_update = 0;  // max timestamp among absorbed documents

    bool operator==(const UnitFeatures&) const = default;
};

struct InterestUnit {
    std::string unit_id;
    std::vector<std::string> member_doc_ids;  // insertion order, no duplicates
    std::string last_title;                   // [T]
    TermCounts term_counts;                   // [K]
    UnitFeatures features;                    // [F]
    EmbeddingVector embedding;                // cache of embed(contextual_text)
    // Creation order within the profile; drives the oldest-survivor rule on
    // merges. Internal bookkeeping, not part of [F].
    std::uint64_t created_seq = 0;

    bool operator==(const InterestUnit&) const = default;
};

struct UnitConfig {
    double tau = 0.65;                  // merge-or-create cosine threshold
    std::uint32_t big_threshold = 5;    // size >= threshold -> "big" group
    std::uint32_t keep_per_group = 10;  // retained per group on prune
    std::uint32_t top_k_terms = 10;     // [K] terms used in contextual text

    bool operator==(const UnitConfig&) const = default;
};

inline void validate(const UnitConfig& config) {
    if (!(config.tau > 0.0 && config.tau < 1.0))
        throw ConfigError("unit config: tau must be in (0,1)");
    if (config.big_threshold == 0 || config.keep_per_group == 0 || config.top_k_terms == 0)
        throw ConfigError("unit config: thresholds and counts must be positive");
}

/// Which parts of a unit feed its contextual text. `both` is the real
/// system; the single-channel modes exist for the text-ablation study.
enum class TextMode { both, title_only, terms_only };

/// Pruning-policy override for the capacity and pruning-factor studies.
/// `combined_recent` / `combined_size` rank ALL units by one factor and keep
/// `keep`; `none` disables pruning ("free").
struct PruneOverride {
    enum class Policy { combined_recent, combined_size, none };
    Policy policy = Policy::combined_recent;
    std::uint32_t keep = 10;

    bool operator==(const PruneOverride&) const = default;
};

struct UserProfile {
    std::string user_id;
    std::vector<InterestUnit> units;  // always ordered by created_seq ascending
    UnitConfig config;
    // Every doc_id ever absorbed, including members of since-pruned units.
    // Makes click-log replay idempotent.
    std::set<std::string> history;
    std::uint64_t next_seq = 0;
    TextMode text_mode = TextMode::both;
    // Disengaged -> the default big/small policy.
    std::optional<PruneOverride> prune_override;

    bool operator==(const UserProfile&) const = default;
};

inline UserProfile make_profile(std::string user_id, UnitConfig config = {}) {
    validate(config);
    UserProfile profile;
    profile.user_id = std::move(user_id);
    profile.config = config;
    return profile;
}

/// The text that represents a unit in embedding space: [T] followed by the
/// top-k [K] terms. Serialization: "{title} | {t1} {t2} ... {tk}". The
/// ablation modes emit just the title or just the space-joined terms.
inline std::string contextual_text(const InterestUnit& unit, const UnitConfig& config,
                                   TextMode mode = TextMode::both) {
    std::string text;
    if (mode != TextMode::terms_only) text = unit.last_title;
    if (mode == TextMode::title_only) return text;
    if (mode == TextMode::both) text += " |";
    bool first = true;
    for (const auto& term : top_terms(unit.term_counts, config.top_k_terms)) {
        if (mode == TextMode::both || !first) text += ' ';
        text += term;
        first = false;
    }
    if (mode == TextMode::both && text.back() == '|')
        text += ' ';  // no terms: keep the "{title} | " shape
    return text;
}

enum class UpdateOutcome {
    created,    // no unit was within tau; a fresh unit absorbed the click
    merged,     // one or more units within tau collapsed with the click
    touched,    // re-click newer than the absorber's last_update; recency bumped
    duplicate,  // already-seen event; no state change
};

struct UpdateResult {
    UpdateOutcome outcome = UpdateOutcome::created;
    std::string unit_id;            // absorbing unit (empty for pruned-doc duplicates)
    std::size_t merged_units = 0;   // |C'| when outcome == merged
};

namespace detail {

inline std::string fresh_unit_id(const UserProfile& profile, const Document& doc) {
    return profile.user_id + ":" + doc.doc_id;
}

inline void reembed(InterestUnit& unit, const UnitConfig& config, const Embedder& embedder,
                    TextMode mode = TextMode::both) {
    unit.embedding = embedder.embed(contextual_text(unit, config, mode));
}

}  // namespace detail

/// Collapses `units` and the arriving document into one unit: members are
/// unioned (profile order, document last), [K] counts are summed, [T] takes
/// the document's title, size sums and last_update maxes, and the embedding
/// is recomputed. The oldest-created unit's identity survives.
inline InterestUnit merge_units(const Document& doc, std::span<const InterestUnit> units,
                                const UnitConfig& config, const Embedder& embedder,
                                TextMode mode = TextMode::both) {
    if (units.empty()) throw DataError("merge_units: unit collection must be non-empty");
    const InterestUnit* oldest = &units.front();
    for (const auto& unit : units)
        if (unit.created_seq < oldest->created_seq) oldest = &unit;

    InterestUnit merged;
    merged.unit_id = oldest->unit_id;
    merged.created_seq = oldest->created_seq;
    merged.last_title = doc.title;
    std::int64_t last_update = doc.timestamp;
    std::uint32_t size = 1;
    for (const auto& unit : units) {
        merged.member_doc_ids.insert(merged.member_doc_ids.end(), unit.member_doc_ids.begin(),
                                     unit.member_doc_ids.end());
        add_term_counts(merged.term_counts, unit.term_counts);
        size += unit.features.size;
        last_update = std::max(last_update, unit.features.last_update);
    }
    merged.member_doc_ids.push_back(doc.doc_id);
    add_term_counts(merged.term_counts, doc.key_terms);
    merged.features = UnitFeatures{size, last_update};
    detail::reembed(merged, config, embedder, mode);
    return merged;
}

/// Big/small pruning: partition by size at big_threshold, keep the
/// keep_per_group most recently updated of each group (ties: unit_id
/// ascending), drop the rest. A profile-level override replaces this with a
/// single-factor combined-list policy (recency or size) or disables pruning.
inline void prune(UserProfile& profile) {
    const auto more_recent = [](const InterestUnit& a, const InterestUnit& b) {
        if (a.features.last_update != b.features.last_update)
            return a.features.last_update > b.features.last_update;
        return a.unit_id < b.unit_id;
    };
    const auto larger = [&](const InterestUnit& a, const InterestUnit& b) {
        if (a.features.size != b.features.size) return a.features.size > b.features.size;
        return more_recent(a, b);
    };
    // Owned copies: erase_if below moves elements, which would invalidate
    // views into their unit_id buffers.
    std::set<std::string> keep;
    std::vector<const InterestUnit*> group;
    auto retain = [&](auto&& membership, auto&& order, std::size_t limit) {
        group.clear();
        for (const auto& unit : profile.units)
            if (membership(unit)) group.push_back(&unit);
        std::sort(group.begin(), group.end(),
                  [&](const InterestUnit* a, const InterestUnit* b) { return order(*a, *b); });
        if (group.size() > limit) group.resize(limit);
        for (const InterestUnit* unit : group) keep.insert(unit->unit_id);
    };
    const auto all = [](const InterestUnit&) { return true; };

    if (profile.prune_override.has_value()) {
        const PruneOverride& ovr = *profile.prune_override;
        switch (ovr.policy) {
            case PruneOverride::Policy::none:
                return;  // unconstrained ("free")
            case PruneOverride::Policy::combined_recent:
                retain(all, more_recent, ovr.keep);
                break;
            case PruneOverride::Policy::combined_size:
                retain(all, larger, ovr.keep);
                break;
        }
    } else {
        const std::uint32_t big = profile.config.big_threshold;
        retain([&](const InterestUnit& u) { return u.features.size >= big; }, more_recent,
               profile.config.keep_per_group);
        retain([&](const InterestUnit& u) { return u.features.size < big; }, more_recent,
               profile.config.keep_per_group);
    }
    std::erase_if(profile.units,
                  [&](const InterestUnit& unit) { return !keep.contains(unit.unit_id); });
}

/// Merge-or-create profile update for one click. Finds every unit whose
/// contextual embedding is within tau of the clicked title's embedding;
/// merges them all with the click, or seeds a new unit when none qualify.
/// Re-clicks of an absorbed document bump recency only; replayed events are
/// rejected as duplicates. Pruning runs after every state change.
inline UpdateResult update_profile(UserProfile& profile, const Document& doc,
                                   const Embedder& embedder) {
    if (doc.doc_id.empty()) throw DataError("update_profile: empty doc_id");

    if (profile.history.contains(doc.doc_id)) {
        for (auto& unit : profile.units) {
            auto& members = unit.member_doc_ids;
            if (std::find(members.begin(), members.end(), doc.doc_id) == members.end()) continue;
            // Strictly-newer guard keeps full-log replays state-free.
            if (doc.timestamp <= unit.features.last_update)
                return {UpdateOutcome::duplicate, unit.unit_id, 0};
            unit.features.last_update = doc.timestamp;
            if (unit.last_title != doc.title) {
                unit.last_title = doc.title;
                detail::reembed(unit, profile.config, embedder, profile.text_mode);
            }
            prune(profile);
            return {UpdateOutcome::touched, unit.unit_id, 0};
        }
        return {UpdateOutcome::duplicate, "", 0};  // absorber was pruned
    }

    const EmbeddingVector doc_embedding = embedder.embed(doc.title);
    // Titles have few distinct tokens, so the relevance scan dots over the
    // title's nonzero support only — same values as similarity() (exact-zero
    // terms are dropped), at a fraction of the cost for wide vocabularies.
    const detail::SparseEntries doc_sparse = detail::sparsify(doc_embedding);
    std::vector<std::size_t> relevant;
    for (std::size_t i = 0; i < profile.units.size(); ++i) {
        if (detail::sparse_cosine(doc_sparse, profile.units[i].embedding) >= profile.config.tau)
            relevant.push_back(i);
    }

    UpdateResult result;
    if (relevant.empty()) {
        InterestUnit unit;
        unit.unit_id = detail::fresh_unit_id(profile, doc);
        unit.created_seq = profile.next_seq++;
        unit.member_doc_ids.push_back(doc.doc_id);
        unit.last_title = doc.title;
        unit.term_counts = doc.key_terms;
        unit.features = UnitFeatures{1, doc.timestamp};
        detail::reembed(unit, profile.config, embedder, profile.text_mode);
        result = {UpdateOutcome::created, unit.unit_id, 0};
        profile.units.push_back(std::move(unit));
    } else {
        std::vector<InterestUnit> gathered;
        gathered.reserve(relevant.size());
        for (std::size_t i : relevant) gathered.push_back(std::move(profile.units[i]));
        InterestUnit merged =
            merge_units(doc, gathered, profile.config, embedder, profile.text_mode);
        result = {UpdateOutcome::merged, merged.unit_id, relevant.size()};
        // The survivor replaces the first (oldest, since profile order is
        // creation order) merged slot; later slots are erased.
        profile.units[relevant.front()] = std::move(merged);
        for (std::size_t k = relevant.size(); k-- > 1;)
            profile.units.erase(profile.units.begin() + static_cast<std::ptrdiff_t>(relevant[k]));
    }
    profile.history.insert(doc.doc_id);
    prune(profile);
    return result;
}

// ---------------------------------------------------------------------------
// Snapshot persistence: JSON-lines, one profile per line, versioned.

inline constexpr int kSnapshotVersion = 1;

inline nlohmann::json unit_to_json(const InterestUnit& unit) {
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& [term, count] : unit.term_counts) terms[term] = count;
    nlohmann::json embedding = nlohmann::json::array();
    for (float v : unit.embedding.values()) embedding.push_back(static_cast<double>(v));
    return nlohmann::json{
        {"unit_id", unit.unit_id},
        {"member_doc_ids", unit.member_doc_ids},
        {"last_title", unit.last_title},
        {"term_counts", std::move(terms)},
        {"features",
         {{"size", unit.features.size}, {"last_update", unit.features.last_update}}},
        {"embedding", std::move(embedding)},
        {"created_seq", unit.created_seq},
    };
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const char* context) {
    auto it = j.find(key);
    if (it == j.end())
        throw DataError(std::string(context) + ": missing field '" + key + "'");
    return *it;
}

}  // namespace detail

inline InterestUnit unit_from_json(const nlohmann::json& j) {
    const char* ctx = "unit snapshot";
    InterestUnit unit;
    try {
        unit.unit_id = detail::require(j, "unit_id", ctx).get<std::string>();
        unit.member_doc_ids =
            detail::require(j, "member_doc_ids", ctx).get<std::vector<std::string>>();
        unit.last_title = detail::require(j, "last_title", ctx).get<std::string>();
        for (const auto& [term, count] : detail::require(j, "term_counts", ctx).items())
            unit.term_counts[term] = count.get<std::uint32_t>();
        const auto& features = detail::require(j, "features", ctx);
        unit.features.size = detail::require(features, "size", ctx).get<std::uint32_t>();
        unit.features.last_update =
            detail::require(features, "last_update", ctx).get<std::int64_t>();
        std::vector<float> values;
        for (const auto& v : detail::require(j, "embedding", ctx))
            values.push_back(static_cast<float>(v.get<double>()));
        unit.embedding = EmbeddingVector(std::move(values));
        unit.created_seq = detail::require(j, "created_seq", ctx).get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string(ctx) + ": malformed field (" + e.what() + ")");
    }
    return unit;
}

inline nlohmann::json snapshot(const UserProfile& profile) {
    nlohmann::json units = nlohmann::json::array();
    for (const auto& unit : profile.units) units.push_back(unit_to_json(unit));
    nlohmann::json j{
        {"version", kSnapshotVersion},
        {"user_id", profile.user_id},
        {"config",
         {{"tau", profile.config.tau},
          {"big_threshold", profile.config.big_threshold},
          {"keep_per_group", profile.config.keep_per_group},
          {"top_k_terms", profile.config.top_k_terms}}},
        {"units", std::move(units)},
        {"history", std::vector<std::string>(profile.history.begin(), profile.history.end())},
        {"next_seq", profile.next_seq},
    };
    if (profile.text_mode != TextMode::both) {
        j["text_mode"] = profile.text_mode == TextMode::title_only ? "title_only" : "terms_only";
    }
    if (profile.prune_override.has_value()) {
        const PruneOverride& ovr = *profile.prune_override;
        const char* policy = ovr.policy == PruneOverride::Policy::combined_recent
                                 ? "combined_recent"
                                 : ovr.policy == PruneOverride::Policy::combined_size
                                       ? "combined_size"
                                       : "none";
        j["prune_override"] = {{"policy", policy}, {"keep", ovr.keep}};
    }
    return j;
}

inline UserProfile restore(const nlohmann::json& j) {
    const char* ctx = "profile snapshot";
    const auto& version = detail::require(j, "version", ctx);
    if (!version.is_number_integer() || version.get<int>() != kSnapshotVersion) {
        throw VersionError("profile snapshot: unsupported version " + version.dump() +
                           " (expected " + std::to_string(kSnapshotVersion) + ")");
    }
    UserProfile profile;
    try {
        profile.user_id = detail::require(j, "user_id", ctx).get<std::string>();
        const auto& config = detail::require(j, "config", ctx);
        profile.config.tau = detail::require(config, "tau", ctx).get<double>();
        profile.config.big_threshold =
            detail::require(config, "big_threshold", ctx).get<std::uint32_t>();
        profile.config.keep_per_group =
            detail::require(config, "keep_per_group", ctx).get<std::uint32_t>();
        profile.config.top_k_terms =
            detail::require(config, "top_k_terms", ctx).get<std::uint32_t>();
        for (const auto& unit : detail::require(j, "units", ctx))
            profile.units.push_back(unit_from_json(unit));
        for (const auto& id : detail::require(j, "history", ctx))
            profile.history.insert(id.get<std::string>());
        profile.next_seq = detail::require(j, "next_seq", ctx).get<std::uint64_t>();
        if (j.contains("text_mode")) {
            const auto mode = j["text_mode"].get<std::string>();
            if (mode == "title_only") profile.text_mode = TextMode::title_only;
            else if (mode == "terms_only") profile.text_mode = TextMode::terms_only;
            else throw DataError("profile snapshot: unknown text_mode '" + mode + "'");
        }
        if (j.contains("prune_override")) {
            const auto& ovr = j["prune_override"];
            PruneOverride parsed;
            const auto policy = detail::require(ovr, "policy", ctx).get<std::string>();
            if (policy == "combined_recent") parsed.policy = PruneOverride::Policy::combined_recent;
            else if (policy == "combined_size") parsed.policy = PruneOverride::Policy::combined_size;
            else if (policy == "none") parsed.policy = PruneOverride::Policy::none;
            else throw DataError("profile snapshot: unknown prune policy '" + policy + "'");
            parsed.keep = detail::require(ovr, "keep", ctx).get<std::uint32_t>();
            profile.prune_override = parsed;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string(ctx) + ": malformed field (" + e.what() + ")");
    }
    validate(profile.config);
    return profile;
}

/// Store file: JSON-lines, one profile snapshot per line, user_id ascending.
inline void write_snapshots(const std::map<std::string, UserProfile>& profiles,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open snapshot file for writing: " + path.string());
    for (const auto& [user_id, profile] : profiles) out << snapshot(profile) << '\n';
}

inline std::map<std::string, UserProfile> read_snapshots(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open snapshot file: " + path.string());
    std::map<std::string, UserProfile> profiles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": invalid JSON object");
        }
        UserProfile profile = restore(j);
        std::string user_id = profile.user_id;
        if (!profiles.emplace(std::move(user_id), std::move(profile)).second) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": duplicate user_id in snapshot file");
        }
    }
    return profiles;
}

/// Thread-safe collection of user profiles. One writer per user at a time;
/// distinct users update in parallel; readers receive copies.
class UnitStore {
public:
    UnitStore() = default;
    explicit UnitStore(UnitConfig config) : config_(config) { validate(config_); }

    const UnitConfig& config() const { return config_; }

    UpdateResult update(const std::string& user_id, const Document& doc,
                        const Embedder& embedder) {
        Entry& entry = entry_for(user_id);
        std::lock_guard lock(entry.mutex);
        return update_profile(entry.profile, doc, embedder);
    }

    /// Copy-out snapshot of one profile (nullopt for unknown users).
    std::optional<UserProfile> find(const std::string& user_id) const {
        std::shared_lock map_lock(*map_mutex_);
        auto it = profiles_.find(user_id);
        if (it == profiles_.end()) return std::nullopt;
        std::lock_guard lock(it->second->mutex);
        return it->second->profile;
    }

    void put(UserProfile profile) {
        Entry& entry = entry_for(profile.user_id);
        std::lock_guard lock(entry.mutex);
        entry.profile = std::move(profile);
    }

    std::vector<std::string> user_ids() const {
        std::shared_lock map_lock(*map_mutex_);
        std::vector<std::string> ids;
        ids.reserve(profiles_.size());
        for (const auto& [id, entry] : profiles_) ids.push_back(id);
        return ids;
    }

    std::size_t size() const {
        std::shared_lock map_lock(*map_mutex_);
        return profiles_.size();
    }

    /// Applies fn to every profile in user_id order (shared lock held; fn
    /// must not call back into the store).
    template <typename Fn>
    void for_each(Fn&& fn) const {
        std::shared_lock map_lock(*map_mutex_);
        for (const auto& [id, entry] : profiles_) {
            std::lock_guard lock(entry->mutex);
            fn(entry->profile);
        }
    }

private:
    struct Entry {
        mutable std::mutex mutex;
        UserProfile profile;
    };

    Entry& entry_for(const std::string& user_id) {
        {
            std::shared_lock map_lock(*map_mutex_);
            auto it = profiles_.find(user_id);
            if (it != profiles_.end()) return *it->second;
        }
        std::unique_lock map_lock(*map_mutex_);
        auto [it, inserted] = profiles_.try_emplace(user_id, nullptr);
        if (inserted) {
            it->second = std::make_unique<Entry>();
            it->second->profile = make_profile(user_id, config_);
        }
        return *it->second;
    }

    UnitConfig config_;
    // Heap-held so the store stays movable (mutexes are not).
    mutable std::unique_ptr<std::shared_mutex> map_mutex_ = std::make_unique<std::shared_mutex>();
    // std::map: deterministic iteration order for snapshots and reports.
    std::map<std::string, std::unique_ptr<Entry>> profiles_;
};

inline void save_snapshots(const UnitStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open snapshot file for writing: " + path.string());
    store.for_each([&](const UserProfile& profile) { out << snapshot(profile) << '\n'; });
    if (!out) throw DataError("failed while writing snapshot file: " + path.string());
}

inline UnitStore load_snapshots(const std::filesystem::path& path, UnitConfig config = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open snapshot file: " + path.string());
    UnitStore store(config);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw DataError("snapshot file " + path.string() + " line " +
                            std::to_string(line_no) + ": invalid JSON");
        }
        store.put(restore(j));
    }
    return store;
}

}  // namespace ira
