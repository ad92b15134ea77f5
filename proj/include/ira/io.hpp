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
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ira/common.hpp"
#include "ira/retrieval.hpp"
#include "ira/unit_store.hpp"

namespace ira {

/// One user interaction from a click log.
struct ClickEvent {
    std::string user_id;
    std::string doc_id;
    std::string title;
    std::int64_t timestamp = 0;

    bool operator==(const ClickEvent&) const = default;
};

namespace detail {

/// Applies fn(parsed_json, line_number) to every non-empty line; malformed
/// lines fail with the 1-based line number.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
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
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    return out;
}

}  // namespace detail

// --- corpus: {"doc_id", "title", "timestamp"} --------------------------------

inline std::vector<Document> read_corpus(const std::filesystem::path& path) {
    std::vector<Document> docs;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        Document doc;
        doc.doc_id = detail::require(j, "doc_id", "corpus record").get<std::string>();
        doc.title = detail::require(j, "title", "corpus record").get<std::string>();
        doc.timestamp = detail::require(j, "timestamp", "corpus record").get<std::int64_t>();
        docs.push_back(std::move(doc));
    });
    return docs;
}

inline void write_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    for (const auto& doc : docs) {
        out << nlohmann::json{{"doc_id", doc.doc_id},
                              {"title", doc.title},
                              {"timestamp", doc.timestamp}}
            << '\n';
    }
}

// --- click log: {"user_id", "doc_id", "title", "timestamp"} ------------------

inline std::vector<ClickEvent> read_clicks(const std::filesystem::path& path) {
    std::vector<ClickEvent> clicks;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        ClickEvent click;
        click.user_id = detail::require(j, "user_id", "click record").get<std::string>();
        click.doc_id = detail::require(j, "doc_id", "click record").get<std::string>();
        click.title = detail::require(j, "title", "click record").get<std::string>();
        click.timestamp = detail::require(j, "timestamp", "click record").get<std::int64_t>();
        clicks.push_back(std::move(click));
    });
    return clicks;
}

inline void write_clicks(const std::vector<ClickEvent>& clicks,
                         const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    for (const auto& click : clicks) {
        out << nlohmann::json{{"user_id", click.user_id},
                              {"doc_id", click.doc_id},
                              {"title", click.title},
                              {"timestamp", click.timestamp}}
            << '\n';
    }
}

/// Groups clicks per user, each list chronological (timestamp, then doc_id —
/// the replay and split order used throughout).
inline std::map<std::string, std::vector<ClickEvent>> group_clicks_by_user(
    std::vector<ClickEvent> clicks) {
    std::map<std::string, std::vector<ClickEvent>> by_user;
    for (auto& click : clicks) by_user[click.user_id].push_back(std::move(click));
    for (auto& [user, list] : by_user) {
        std::stable_sort(list.begin(), list.end(), [](const ClickEvent& a, const ClickEvent& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            return a.doc_id < b.doc_id;
        });
    }
    return by_user;
}

// --- precomputed vectors: {"doc_id", "vector": [float; d]} -------------------

inline std::unordered_map<std::string, std::vector<float>> read_vectors(
    const std::filesystem::path& path) {
    std::unordered_map<std::string, std::vector<float>> vectors;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line_no) {
        auto doc_id = detail::require(j, "doc_id", "vector record").get<std::string>();
        std::vector<float> values;
        for (const auto& v : detail::require(j, "vector", "vector record"))
            values.push_back(static_cast<float>(v.get<double>()));
        if (!vectors.emplace(std::move(doc_id), std::move(values)).second) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": duplicate doc_id in vector file");
        }
    });
    return vectors;
}

inline void write_vectors(const std::unordered_map<std::string, std::vector<float>>& vectors,
                          const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    // Sorted emission: vector files diff cleanly across runs.
    std::map<std::string, const std::vector<float>*> ordered;
    for (const auto& [id, vec] : vectors) ordered.emplace(id, &vec);
    for (const auto& [id, vec] : ordered) {
        nlohmann::json values = nlohmann::json::array();
        for (float v : *vec) values.push_back(static_cast<double>(v));
        out << nlohmann::json{{"doc_id", id}, {"vector", std::move(values)}} << '\n';
    }
}

// --- ranked output: {"rank", "doc_id", "score"} -------------------------------

inline void write_ranked(const RankedResult& result, std::ostream& out) {
    for (std::size_t i = 0; i < result.size(); ++i) {
        out << nlohmann::json{{"rank", i + 1},
                              {"doc_id", result[i].doc_id},
                              {"score", result[i].score}}
            << '\n';
    }
}

inline RankedResult read_ranked(const std::filesystem::path& path) {
    RankedResult result;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
        result.push_back(RankedItem{
            detail::require(j, "doc_id", "ranked record").get<std::string>(),
            detail::require(j, "score", "ranked record").get<double>(),
        });
    });
    return result;
}

}  // namespace ira
