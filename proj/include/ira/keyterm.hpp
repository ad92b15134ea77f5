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
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ira/common.hpp"
#include "ira/text.hpp"

namespace ira {

/// Term -> occurrence count. Ordered map so iteration (and serialization)
/// order is deterministic.
using TermCounts = std::map<std::string, std::uint32_t>;

/// Key-term extraction contract. Implementations must be deterministic;
/// returned terms keep title order and duplicates (duplicates feed counts).
class KeyTermExtractor {
public:
    virtual ~KeyTermExtractor() = default;
    virtual std::vector<std::string> extract(std::string_view title) const = 0;
};

inline const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> words = {
        "about", "after", "all",  "also", "an",   "and",  "are", "as",   "at",   "be",
        "been",  "but",  "by",   "can",  "could", "do",   "for", "from", "had",  "has",
        "have",  "he",   "her",  "his",  "how",  "if",   "in",  "into", "is",   "it",
        "its",   "just", "more", "most", "new",  "no",   "not", "of",   "on",   "or",
        "our",   "out",  "over", "she",  "so",   "than", "that", "the", "their", "them",
        "then",  "there", "they", "this", "to",   "up",   "was", "we",   "were", "what",
        "when",  "which", "who",  "will", "with", "would", "you", "your",
    };
    return words;
}

/// Loads a newline-delimited stopword file. Blank lines and lines starting
/// with '#' are skipped; entries are lowercased via the tokenizer's rules.
inline std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stopword file: " + path.string());
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n' ||
                                 line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        std::string word = line.substr(start);
        if (word.empty() || word[0] == '#') continue;
        for (char& c : word) c = ascii_lower(c);
        words.insert(std::move(word));
    }
    return words;
}

/// Default extractor: tokenize the title and drop stopwords.
class StopwordExtractor final : public KeyTermExtractor {
public:
    StopwordExtractor() : stopwords_(default_stopwords()) {}
    explicit StopwordExtractor(std::unordered_set<std::string> stopwords)
        : stopwords_(std::move(stopwords)) {}

    std::vector<std::string> extract(std::string_view title) const override {
        std::vector<std::string> terms;
        for (auto& token : tokenize(title)) {
            if (stopwords_.contains(token)) continue;
            terms.push_back(std::move(token));
        }
        return terms;
    }

private:
    std::unordered_set<std::string> stopwords_;
};

inline std::shared_ptr<const KeyTermExtractor> make_default_extractor() {
    return std::make_shared<StopwordExtractor>();
}

inline void add_terms(TermCounts& counts, std::span<const std::string> terms) {
    for (const auto& term : terms) ++counts[term];
}

/// Extracts a title's key terms as a term -> count map.
inline TermCounts extract_key_terms(std::string_view title, const KeyTermExtractor& extractor) {
    TermCounts counts;
    add_terms(counts, extractor.extract(title));
    return counts;
}

inline TermCounts extract_key_terms(std::string_view title) {
    static const StopwordExtractor extractor;
    return extract_key_terms(title, extractor);
}

/// Pointwise sum, in place (used when units merge).
inline void add_term_counts(TermCounts& into, const TermCounts& from) {
    for (const auto& [term, count] : from) into[term] += count;
}

/// Pointwise sum of two count maps: union of terms, counts added.
inline TermCounts merge_term_counts(const TermCounts& a, const TermCounts& b) {
    TermCounts merged = a;
    add_term_counts(merged, b);
    return merged;
}

/// Top k terms by count descending; ties break lexicographically ascending.
/// Returns all terms (still ordered) when fewer than k exist.
inline std::vector<std::string> top_terms(const TermCounts& counts, std::size_t k) {
    std::vector<std::pair<std::string_view, std::uint32_t>> entries;
    entries.reserve(counts.size());
    for (const auto& [term, count] : counts) entries.emplace_back(term, count);
    // Map iteration is already lexicographic, so a stable sort by count
    // keeps the required ascending-term order within equal counts.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (entries.size() > k) entries.resize(k);
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& [term, count] : entries) out.emplace_back(term);
    return out;
}

}  // namespace ira
