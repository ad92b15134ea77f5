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
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ira/common.hpp"
#include "ira/embedding.hpp"
#include "ira/index.hpp"
#include "ira/unit_store.hpp"

namespace ira {

struct RetrievalConfig {
    std::uint32_t per_unit_n = 100;    // ANN depth per unit
    std::uint32_t max_results = 100;   // final list truncation
    bool exclude_clicked = true;       // drop documents already absorbed by a unit

    bool operator==(const RetrievalConfig&) const = default;
};

inline void validate(const RetrievalConfig& config) {
    if (config.per_unit_n == 0 || config.max_results == 0)
        throw ConfigError("retrieval config: per_unit_n and max_results must be positive");
}

struct RankedItem {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const RankedItem&) const = default;
};

using RankedResult = std::vector<RankedItem>;

/// A document's retrieval score: the sum of its similarity to every unit in
/// the profile (not just the unit that surfaced it). Empty profile -> 0.
inline double score_document(const EmbeddingVector& doc_embedding, const UserProfile& profile) {
    double score = 0.0;
    for (const auto& unit : profile.units) score += similarity(doc_embedding, unit.embedding);
    return score;
}

/// Full personalized retrieval: per-unit nearest-neighbor search, candidate
/// union with dedup, optional clicked-document exclusion, then ranking by
/// sum-of-similarity (ties: doc_id ascending), truncated to max_results.
inline RankedResult retrieve(const UserProfile& profile, const DocumentIndex& index,
                             const RetrievalConfig& config) {
    validate(config);
    if (profile.units.empty() || index.size() == 0) return {};
    for (const auto& unit : profile.units) {
        if (unit.embedding.dimension() != index.dimension()) {
            throw MismatchError("retrieve: profile embeddings have dimension " +
                                std::to_string(unit.embedding.dimension()) +
                                ", index has dimension " + std::to_string(index.dimension()) +
                                "; profile and index were built with different embedders");
        }
    }

    // Step 1: gather per-unit neighbors, dedupe into slot order (== doc_id
    // ascending, since slots are assigned in sorted order).
    std::vector<std::uint32_t> candidates;
    for (const auto& unit : profile.units) {
        for (auto [sim, slot] : index.search_slots(unit.embedding, config.per_unit_n))
            candidates.push_back(slot);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::unordered_set<std::string_view> clicked;
    if (config.exclude_clicked) {
        for (const auto& unit : profile.units)
            for (const auto& id : unit.member_doc_ids) clicked.insert(id);
    }

    // Step 2: score every candidate against ALL units. Summation runs in
    // profile (creation) order so scores are reproducible bit-for-bit.
    struct Scored {
        double score;
        std::uint32_t slot;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (std::uint32_t slot : candidates) {
        if (config.exclude_clicked && clicked.contains(index.document(slot).doc_id)) continue;
        const auto doc_vec = index.vector(slot);
        double score = 0.0;
        for (const auto& unit : profile.units) score += detail::dot(doc_vec, unit.embedding.values());
        scored.push_back({score, slot});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.slot < b.slot;
    });
    if (scored.size() > config.max_results) scored.resize(config.max_results);

    RankedResult result;
    result.reserve(scored.size());
    for (const auto& s : scored) result.push_back({index.document(s.slot).doc_id, s.score});
    return result;
}

}  // namespace ira
