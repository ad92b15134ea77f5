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
#include <fstream>
#include <string>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/eval.hpp"
#include "ira/index.hpp"
#include "ira/retrieval.hpp"
#include "ira/simulator.hpp"
#include "ira/unit_store.hpp"

namespace ira {

/// File locations a command may need. Empty string = not provided; each
/// command validates the subset it actually uses.
struct PathsConfig {
    std::string corpus;
    std::string clicks;
    std::string stopwords;
    std::string snapshots;
    std::string index;
    std::string ground_truth;
    std::string output;

    bool operator==(const PathsConfig&) const = default;
};

/// Everything a command run depends on. One file, fully echoed into every
/// report, so a report alone reproduces its run.
struct GlobalConfig {
    EmbedderConfig embedder;
    UnitConfig unit;
    RetrievalConfig retrieval;
    EvalConfig eval;
    SimConfig sim;
    IndexMode index_mode = IndexMode::exact;
    IndexParams index_params;
    PathsConfig paths;

    bool operator==(const GlobalConfig&) const = default;
};

// --- JSON (every field optional on read; defaults fill the rest) --------------

inline nlohmann::json embedder_config_to_json(const EmbedderConfig& c) {
    nlohmann::json j{{"kind", c.kind == EmbedderKind::vocab ? "vocab" : "hashed"},
                     {"dimension", c.dimension}};
    if (c.kind == EmbedderKind::vocab) j["vocabulary"] = c.vocabulary;
    if (c.kind == EmbedderKind::hashed) j["seed"] = c.seed;
    return j;
}

inline EmbedderConfig embedder_config_from_json(const nlohmann::json& j) {
    EmbedderConfig c;
    if (j.contains("kind")) {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "vocab") c.kind = EmbedderKind::vocab;
        else if (kind == "hashed") c.kind = EmbedderKind::hashed;
        else throw ConfigError("embedder config: unknown kind '" + kind + "'");
    }
    if (j.contains("dimension")) c.dimension = j.at("dimension").get<std::size_t>();
    if (j.contains("vocabulary"))
        c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline nlohmann::json unit_config_to_json(const UnitConfig& c) {
    return {{"tau", c.tau},
            {"big_threshold", c.big_threshold},
            {"keep_per_group", c.keep_per_group},
            {"top_k_terms", c.top_k_terms}};
}

inline UnitConfig unit_config_from_json(const nlohmann::json& j) {
    UnitConfig c;
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("big_threshold")) c.big_threshold = j.at("big_threshold").get<std::uint32_t>();
    if (j.contains("keep_per_group"))
        c.keep_per_group = j.at("keep_per_group").get<std::uint32_t>();
    if (j.contains("top_k_terms")) c.top_k_terms = j.at("top_k_terms").get<std::uint32_t>();
    return c;
}

inline nlohmann::json retrieval_config_to_json(const RetrievalConfig& c) {
    return {{"per_unit_n", c.per_unit_n},
            {"max_results", c.max_results},
            {"exclude_clicked", c.exclude_clicked}};
}

inline RetrievalConfig retrieval_config_from_json(const nlohmann::json& j) {
    RetrievalConfig c;
    if (j.contains("per_unit_n")) c.per_unit_n = j.at("per_unit_n").get<std::uint32_t>();
    if (j.contains("max_results")) c.max_results = j.at("max_results").get<std::uint32_t>();
    if (j.contains("exclude_clicked")) c.exclude_clicked = j.at("exclude_clicked").get<bool>();
    return c;
}

inline nlohmann::json index_params_to_json(const IndexParams& p) {
    return {{"graph_degree", p.graph_degree},
            {"build_breadth", p.build_breadth},
            {"search_breadth", p.search_breadth},
            {"level_seed", p.level_seed}};
}

inline IndexParams index_params_from_json(const nlohmann::json& j) {
    IndexParams p;
    if (j.contains("graph_degree")) p.graph_degree = j.at("graph_degree").get<std::uint32_t>();
    if (j.contains("build_breadth")) p.build_breadth = j.at("build_breadth").get<std::uint32_t>();
    if (j.contains("search_breadth"))
        p.search_breadth = j.at("search_breadth").get<std::uint32_t>();
    if (j.contains("level_seed")) p.level_seed = j.at("level_seed").get<std::uint64_t>();
    return p;
}

inline nlohmann::json sim_config_to_json(const SimConfig& c) {
    nlohmann::json drift = nlohmann::json::array();
    for (const DriftEvent& e : c.drift)
        drift.push_back({{"period", e.period}, {"probability", e.probability}});
    return {{"num_users", c.num_users},
            {"num_topics", c.num_topics},
            {"core_terms", c.core_terms},
            {"stop_terms", c.stop_terms},
            {"subtopics", c.subtopics},
            {"anchors_per_subtopic", c.anchors_per_subtopic},
            {"tail_terms", c.tail_terms},
            {"tails_per_doc", c.tails_per_doc},
            {"vague_core_drop", c.vague_core_drop},
            {"vague_noise_tokens", c.vague_noise_tokens},
            {"noise_terms", c.noise_terms},
            {"num_families", c.num_families},
            {"family_terms", c.family_terms},
            {"clean_docs_per_cell", c.clean_docs_per_cell},
            {"vague_docs_per_cell", c.vague_docs_per_cell},
            {"docs_per_family", c.docs_per_family},
            {"background_groups", c.background_groups},
            {"background_docs_per_group", c.background_docs_per_group},
            {"background_fixed_terms", c.background_fixed_terms},
            {"background_extra_terms", c.background_extra_terms},
            {"interests_min", c.interests_min},
            {"interests_max", c.interests_max},
            {"periods", c.periods},
            {"clicks_per_user_per_period", c.clicks_per_user_per_period},
            {"drift", std::move(drift)},
            {"session_min", c.session_min},
            {"session_max", c.session_max},
            {"preferred_sub_bias", c.preferred_sub_bias},
            {"burst_probability", c.burst_probability},
            {"burst_length", c.burst_length},
            {"bursts_in_last_period", c.bursts_in_last_period},
            {"dormancy", c.dormancy},
            {"emerging_clicks", c.emerging_clicks},
            {"rng_seed", c.rng_seed}};
}

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    auto u32 = [&](const char* key, std::uint32_t& out) {
        if (j.contains(key)) out = j.at(key).get<std::uint32_t>();
    };
    u32("num_users", c.num_users);
    u32("num_topics", c.num_topics);
    u32("core_terms", c.core_terms);
    u32("stop_terms", c.stop_terms);
    u32("subtopics", c.subtopics);
    u32("anchors_per_subtopic", c.anchors_per_subtopic);
    u32("tail_terms", c.tail_terms);
    u32("tails_per_doc", c.tails_per_doc);
    u32("vague_core_drop", c.vague_core_drop);
    u32("vague_noise_tokens", c.vague_noise_tokens);
    u32("noise_terms", c.noise_terms);
    u32("num_families", c.num_families);
    u32("family_terms", c.family_terms);
    u32("clean_docs_per_cell", c.clean_docs_per_cell);
    u32("vague_docs_per_cell", c.vague_docs_per_cell);
    u32("docs_per_family", c.docs_per_family);
    u32("background_groups", c.background_groups);
    u32("background_docs_per_group", c.background_docs_per_group);
    u32("background_fixed_terms", c.background_fixed_terms);
    u32("background_extra_terms", c.background_extra_terms);
    u32("interests_min", c.interests_min);
    u32("interests_max", c.interests_max);
    u32("session_min", c.session_min);
    u32("session_max", c.session_max);
    u32("burst_length", c.burst_length);
    u32("emerging_clicks", c.emerging_clicks);
    if (j.contains("periods")) c.periods = j.at("periods").get<std::vector<std::string>>();
    if (j.contains("clicks_per_user_per_period")) {
        c.clicks_per_user_per_period =
            j.at("clicks_per_user_per_period").get<std::vector<std::uint32_t>>();
    }
    if (j.contains("drift")) {
        c.drift.clear();
        for (const auto& e : j.at("drift")) {
            c.drift.push_back({e.at("period").get<std::size_t>(),
                               e.at("probability").get<double>()});
        }
    }
    if (j.contains("preferred_sub_bias"))
        c.preferred_sub_bias = j.at("preferred_sub_bias").get<double>();
    if (j.contains("burst_probability"))
        c.burst_probability = j.at("burst_probability").get<double>();
    if (j.contains("bursts_in_last_period"))
        c.bursts_in_last_period = j.at("bursts_in_last_period").get<bool>();
    if (j.contains("dormancy")) c.dormancy = j.at("dormancy").get<bool>();
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

inline nlohmann::json paths_config_to_json(const PathsConfig& p) {
    return {{"corpus", p.corpus},         {"clicks", p.clicks},
            {"stopwords", p.stopwords},   {"snapshots", p.snapshots},
            {"index", p.index},           {"ground_truth", p.ground_truth},
            {"output", p.output}};
}

inline PathsConfig paths_config_from_json(const nlohmann::json& j) {
    PathsConfig p;
    auto str = [&](const char* key, std::string& out) {
        if (j.contains(key)) out = j.at(key).get<std::string>();
    };
    str("corpus", p.corpus);
    str("clicks", p.clicks);
    str("stopwords", p.stopwords);
    str("snapshots", p.snapshots);
    str("index", p.index);
    str("ground_truth", p.ground_truth);
    str("output", p.output);
    return p;
}

inline nlohmann::json global_config_to_json(const GlobalConfig& c) {
    return {{"embedder", embedder_config_to_json(c.embedder)},
            {"unit", unit_config_to_json(c.unit)},
            {"retrieval", retrieval_config_to_json(c.retrieval)},
            {"eval", eval_config_to_json(c.eval)},
            {"simulator", sim_config_to_json(c.sim)},
            {"index_mode", c.index_mode == IndexMode::exact ? "exact" : "approximate"},
            {"index_params", index_params_to_json(c.index_params)},
            {"paths", paths_config_to_json(c.paths)}};
}

inline GlobalConfig global_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    GlobalConfig c;
    if (j.contains("embedder")) c.embedder = embedder_config_from_json(j.at("embedder"));
    if (j.contains("unit")) c.unit = unit_config_from_json(j.at("unit"));
    if (j.contains("retrieval")) c.retrieval = retrieval_config_from_json(j.at("retrieval"));
    if (j.contains("eval")) c.eval = eval_config_from_json(j.at("eval"));
    if (j.contains("simulator")) c.sim = sim_config_from_json(j.at("simulator"));
    if (j.contains("index_mode")) {
        const auto mode = j.at("index_mode").get<std::string>();
        if (mode == "exact") c.index_mode = IndexMode::exact;
        else if (mode == "approximate") c.index_mode = IndexMode::approximate;
        else throw ConfigError("config: unknown index_mode '" + mode + "'");
    }
    if (j.contains("index_params")) c.index_params = index_params_from_json(j.at("index_params"));
    if (j.contains("paths")) c.paths = paths_config_from_json(j.at("paths"));
    return c;
}

inline GlobalConfig load_global_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    try {
        return global_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

}  // namespace ira
