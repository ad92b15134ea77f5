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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/eval.hpp"
#include "ira/io.hpp"
#include "ira/simulator.hpp"
#include "ira/unit_store.hpp"

namespace ira {

/// Ablation studies over simulator data. Every variant builds per-user
/// profiles from periods A (or A+B) only and is evaluated on the held-out
/// tail of period C, so all comparisons share one protocol: the candidate
/// sets, split, and metrics are identical across variants.
struct StudyVariant {
    std::string name;
    EvalReport report;
};

struct StudyResult {
    std::string study;
    std::vector<StudyVariant> variants;
};

inline std::map<std::string, UserProfile> build_profiles(
    const std::vector<ClickEvent>& clicks, const Embedder& embedder, const UnitConfig& config,
    TextMode mode = TextMode::both, std::optional<PruneOverride> prune_override = std::nullopt) {
    std::map<std::string, UserProfile> profiles;
    for (auto& [user_id, events] : group_clicks_by_user(clicks)) {
        UserProfile profile = make_profile(user_id, config);
        profile.text_mode = mode;
        profile.prune_override = prune_override;
        for (const ClickEvent& event : events)
            update_profile(profile, make_document(event.doc_id, event.title, event.timestamp),
                           embedder);
        profiles.emplace(user_id, std::move(profile));
    }
    return profiles;
}

/// Shared protocol state: one corpus embedding pass and one split reused by
/// every variant of every study.
struct StudyContext {
    const SimOutput* sim = nullptr;
    const Embedder* embedder = nullptr;
    UnitConfig unit;
    EvalConfig eval;
    EvalCorpus corpus;
    SplitResult split;
    std::vector<ClickEvent> clicks_a;   // period A
    std::vector<ClickEvent> clicks_ab;  // periods A + B
};

inline StudyContext make_study_context(const SimOutput& sim, const Embedder& embedder,
                                       const UnitConfig& unit, const EvalConfig& eval) {
    if (sim.clicks_by_period.size() < 3)
        throw ConfigError("studies need at least three periods (A, B, C)");
    StudyContext ctx;
    ctx.sim = &sim;
    ctx.embedder = &embedder;
    ctx.unit = unit;
    ctx.eval = eval;
    ctx.corpus = build_eval_corpus(sim.corpus, embedder);
    ctx.split = split_dataset(group_clicks_by_user(sim.all_clicks()), eval);
    ctx.clicks_a = sim.clicks_by_period.front();
    ctx.clicks_ab = ctx.clicks_a;
    for (std::size_t p = 1; p + 1 < sim.clicks_by_period.size(); ++p)
        ctx.clicks_ab.insert(ctx.clicks_ab.end(), sim.clicks_by_period[p].begin(),
                             sim.clicks_by_period[p].end());
    return ctx;
}

namespace detail {

inline StudyVariant run_variant(const StudyContext& ctx, const std::string& name,
                                const std::vector<ClickEvent>& clicks, TextMode mode,
                                std::optional<PruneOverride> prune_override,
                                const SplitResult& split) {
    IraRanker ranker(name, &ctx.corpus,
                     build_profiles(clicks, *ctx.embedder, ctx.unit, mode, prune_override));
    return StudyVariant{name, evaluate(ranker, split, ctx.corpus, ctx.eval)};
}

}  // namespace detail

/// Frozen-at-A profiles vs cumulative A+B profiles, both judged on period C.
inline StudyResult run_adaptability(const StudyContext& ctx) {
    StudyResult result{"adaptability", {}};
    result.variants.push_back(detail::run_variant(ctx, "IRA(A)", ctx.clicks_a, TextMode::both,
                                                  std::nullopt, ctx.split));
    result.variants.push_back(detail::run_variant(ctx, "IRA(A+B)", ctx.clicks_ab, TextMode::both,
                                                  std::nullopt, ctx.split));
    return result;
}

/// Contextual-text ablation: unit text from the title only, key terms only,
/// or both.
inline StudyResult run_text_ablation(const StudyContext& ctx) {
    StudyResult result{"text-ablation", {}};
    result.variants.push_back(detail::run_variant(ctx, "K-only", ctx.clicks_ab,
                                                  TextMode::terms_only, std::nullopt, ctx.split));
    result.variants.push_back(detail::run_variant(ctx, "T-only", ctx.clicks_ab,
                                                  TextMode::title_only, std::nullopt, ctx.split));
    result.variants.push_back(detail::run_variant(ctx, "T+K", ctx.clicks_ab, TextMode::both,
                                                  std::nullopt, ctx.split));
    return result;
}

/// Pruning-factor ablation: the grouped recency+size policy vs a single
/// combined list pruned by recency only or by size only (same keep budget).
inline StudyResult run_pruning_ablation(const StudyContext& ctx) {
    StudyResult result{"pruning-ablation", {}};
    const std::uint32_t keep = ctx.unit.keep_per_group;
    result.variants.push_back(detail::run_variant(
        ctx, "recency-only", ctx.clicks_ab, TextMode::both,
        PruneOverride{PruneOverride::Policy::combined_recent, keep}, ctx.split));
    result.variants.push_back(detail::run_variant(
        ctx, "size-only", ctx.clicks_ab, TextMode::both,
        PruneOverride{PruneOverride::Policy::combined_size, keep}, ctx.split));
    result.variants.push_back(detail::run_variant(ctx, "combined", ctx.clicks_ab, TextMode::both,
                                                  std::nullopt, ctx.split));
    return result;
}

/// Unit-count cap: keep the N most recently updated units overall, or "free"
/// (no pruning). Evaluated on users with at least three ground-truth
/// interests, where a tight cap must hurt.
inline StudyResult run_unit_cap(const StudyContext& ctx,
                                const std::vector<std::uint32_t>& caps = {1, 5, 10, 20}) {
    StudyResult result{"unit-cap", {}};
    SplitResult multi;
    multi.excluded_short = ctx.split.excluded_short;
    multi.excluded_long = ctx.split.excluded_long;
    std::map<std::string, const UserTruth*> truth;
    for (const UserTruth& t : ctx.sim->truth) truth.emplace(t.user_id, &t);
    for (const UserSplit& user : ctx.split.users) {
        const auto it = truth.find(user.user_id);
        if (it != truth.end() && it->second->interests_a.size() >= 3)
            multi.users.push_back(user);
    }
    for (std::uint32_t cap : caps) {
        result.variants.push_back(detail::run_variant(
            ctx, "cap-" + std::to_string(cap), ctx.clicks_ab, TextMode::both,
            PruneOverride{PruneOverride::Policy::combined_recent, cap}, multi));
    }
    result.variants.push_back(
        detail::run_variant(ctx, "free", ctx.clicks_ab, TextMode::both,
                            PruneOverride{PruneOverride::Policy::none, 0}, multi));
    return result;
}

inline StudyResult run_study(const std::string& name, const StudyContext& ctx) {
    if (name == "adaptability") return run_adaptability(ctx);
    if (name == "text-ablation") return run_text_ablation(ctx);
    if (name == "pruning-ablation") return run_pruning_ablation(ctx);
    if (name == "unit-cap") return run_unit_cap(ctx);
    throw ConfigError("unknown study '" + name +
                      "' (expected adaptability, text-ablation, pruning-ablation, unit-cap)");
}

// --- emission ------------------------------------------------------------------

/// Plot-ready CSV: one row per (variant, cutoff).
inline void write_study_csv(const StudyResult& result, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    out << "study,variant,cutoff,hit_ratio,ndcg,users,evaluations\n";
    for (const StudyVariant& variant : result.variants) {
        for (std::uint32_t n : variant.report.config.metric_cutoffs) {
            out << result.study << ',' << variant.name << ',' << n << ','
                << format_metric(variant.report.hr.count(n) ? variant.report.hr.at(n) : 0.0)
                << ','
                << format_metric(variant.report.ndcg.count(n) ? variant.report.ndcg.at(n) : 0.0)
                << ',' << variant.report.users_evaluated << ',' << variant.report.evaluations
                << '\n';
        }
    }
}

inline std::string render_study_table(const StudyResult& result) {
    std::vector<EvalReport> rows;
    for (const StudyVariant& variant : result.variants) {
        EvalReport row = variant.report;
        row.system = variant.name;
        rows.push_back(std::move(row));
    }
    return render_metrics_table(rows);
}

inline nlohmann::json study_to_json(const StudyResult& result,
                                    const nlohmann::json& effective_config) {
    nlohmann::json variants = nlohmann::json::array();
    for (const StudyVariant& variant : result.variants) {
        nlohmann::json row = report_to_json(variant.report, nlohmann::json::object());
        row.erase("config");
        row.erase("per_user");
        row["variant"] = variant.name;
        variants.push_back(std::move(row));
    }
    return nlohmann::json{
        {"study", result.study}, {"config", effective_config}, {"variants", variants}};
}

}  // namespace ira
