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

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ira/common.hpp"
#include "ira/text.hpp"

namespace ira {

/// Unit-L2-norm vector, or the all-zero sentinel for empty text.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}

    static EmbeddingVector zero(std::size_t dimension) {
        return EmbeddingVector(std::vector<float>(dimension, 0.0f));
    }

    std::size_t dimension() const { return values_.size(); }
    std::span<const float> values() const { return values_; }

    bool is_zero() const {
        for (float v : values_)
            if (v != 0.0f) return false;
        return true;
    }

    double l2_norm() const {
        double s = 0.0;
        for (float v : values_) s += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(s);
    }

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<float> values_;
};

/// Cosine similarity of two unit vectors (their dot product). Returns 0
/// if either operand is the zero-vector sentinel.
inline double similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw MismatchError("similarity: dimension mismatch (" +
                            std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()) + "); embedder configs are incompatible");
    }
    if (a.is_zero() || b.is_zero()) return 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        dot += static_cast<double>(av[i]) * static_cast<double>(bv[i]);
    }
    return dot;
}

enum class EmbedderKind { vocab, hashed };

struct EmbedderConfig {
    EmbedderKind kind = EmbedderKind::hashed;
    std::size_t dimension = 64;
    std::vector<std::string> vocabulary;  // vocab kind only
    std::uint64_t seed = 0;               // hashed kind only

    bool operator==(const EmbedderConfig&) const = default;
};

inline void validate(const EmbedderConfig& config) {
    if (config.dimension == 0) throw ConfigError("embedder dimension must be positive");
    if (config.kind == EmbedderKind::vocab) {
        if (config.vocabulary.size() != config.dimension) {
            throw ConfigError("vocab embedder: dimension (" + std::to_string(config.dimension) +
                              ") must equal vocabulary length (" +
                              std::to_string(config.vocabulary.size()) + ")");
        }
        std::unordered_map<std::string_view, std::size_t> seen;
        for (const auto& term : config.vocabulary) {
            if (!seen.emplace(term, seen.size()).second) {
                throw ConfigError("vocab embedder: duplicate vocabulary term '" + term + "'");
            }
        }
    } else {
        if ((config.dimension & (config.dimension - 1)) != 0) {
            throw ConfigError("hashed embedder: dimension must be a power of two, got " +
                              std::to_string(config.dimension));
        }
    }
}

/// Text embedder contract. Implementations must be deterministic for a
/// fixed configuration and return unit vectors (or the zero sentinel).
class Embedder {
public:
    virtual ~Embedder() = default;

    virtual EmbeddingVector embed(std::string_view text) const = 0;

    /// Batch entry point so precomputed or remote embedders can plug in.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed(t));
        return out;
    }

    virtual std::size_t dimension() const = 0;
    virtual const EmbedderConfig& config() const = 0;
};

namespace detail {

/// Nonzero entries of an embedding in ascending index order. Dotting over the
/// support is bitwise identical to the dense loop: skipped positions would
/// contribute exact zeros, and adding a zero never changes a double.
struct SparseEntries {
    std::vector<std::pair<std::uint32_t, float>> nonzero;
    std::size_t dimension = 0;
};

inline SparseEntries sparsify(const EmbeddingVector& v) {
    SparseEntries sparse;
    sparse.dimension = v.dimension();
    for (std::uint32_t i = 0; i < v.dimension(); ++i)
        if (v.values()[i] != 0.0f) sparse.nonzero.emplace_back(i, v.values()[i]);
    return sparse;
}

inline double sparse_cosine(const SparseEntries& doc, const EmbeddingVector& unit) {
    if (doc.dimension != unit.dimension())
        throw MismatchError("similarity: dimension mismatch");
    double acc = 0.0;
    for (const auto& [i, value] : doc.nonzero)
        acc += static_cast<double>(value) * static_cast<double>(unit.values()[i]);
    return acc;
}

inline double sparse_sparse_dot(const SparseEntries& a, const SparseEntries& b) {
    if (a.dimension != b.dimension)
        throw MismatchError("similarity: dimension mismatch");
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.nonzero.size() && j < b.nonzero.size()) {
        if (a.nonzero[i].first < b.nonzero[j].first) {
            ++i;
        } else if (a.nonzero[i].first > b.nonzero[j].first) {
            ++j;
        } else {
            acc += static_cast<double>(a.nonzero[i].second) *
                   static_cast<double>(b.nonzero[j].second);
            ++i;
            ++j;
        }
    }
    return acc;
}

inline EmbeddingVector normalize_counts(std::vector<float> counts, bool any_token) {
    if (!any_token) return EmbeddingVector(std::move(counts));  // zero sentinel
    double norm = 0.0;
    for (float c : counts) norm += static_cast<double>(c) * static_cast<double>(c);
    norm = std::sqrt(norm);
    if (norm == 0.0) return EmbeddingVector(std::move(counts));
    for (float& c : counts) c = static_cast<float>(static_cast<double>(c) / norm);
    return EmbeddingVector(std::move(counts));
}

}  // namespace detail

/// Closed-vocabulary bag-of-words embedder. Collision-free, so expected
/// values are hand-computable; unknown terms are dropped.
class VocabEmbedder final : public Embedder {
public:
    explicit VocabEmbedder(EmbedderConfig config) : config_(std::move(config)) {
        validate(config_);
        if (config_.kind != EmbedderKind::vocab)
            throw ConfigError("VocabEmbedder requires kind=vocab");
        for (std::size_t i = 0; i < config_.vocabulary.size(); ++i) {
            index_.emplace(config_.vocabulary[i], i);
        }
    }

    EmbeddingVector embed(std::string_view text) const override {
        std::vector<float> counts(config_.dimension, 0.0f);
        bool any = false;
        for (const auto& token : tokenize(text)) {
            auto it = index_.find(token);
            if (it == index_.end()) continue;
            counts[it->second] += 1.0f;
            any = true;
        }
        return detail::normalize_counts(std::move(counts), any);
    }

    std::size_t dimension() const override { return config_.dimension; }
    const EmbedderConfig& config() const override { return config_; }

private:
    EmbedderConfig config_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Open-vocabulary feature-hashing embedder. Buckets tokens by a stable
/// 64-bit hash; dimension must be a power of two.
class HashedEmbedder final : public Embedder {
public:
    explicit HashedEmbedder(EmbedderConfig config) : config_(std::move(config)) {
        validate(config_);
        if (config_.kind != EmbedderKind::hashed)
            throw ConfigError("HashedEmbedder requires kind=hashed");
    }

    EmbeddingVector embed(std::string_view text) const override {
        std::vector<float> counts(config_.dimension, 0.0f);
        bool any = false;
        const std::uint64_t mask = config_.dimension - 1;
        for (const auto& token : tokenize(text)) {
            std::uint64_t h = splitmix64(fnv1a64(token) ^ config_.seed);
            counts[h & mask] += 1.0f;
            any = true;
        }
        return detail::normalize_counts(std::move(counts), any);
    }

    std::size_t dimension() const override { return config_.dimension; }
    const EmbedderConfig& config() const override { return config_; }

private:
    EmbedderConfig config_;
};

inline std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
    if (config.kind == EmbedderKind::vocab)
        return std::make_unique<VocabEmbedder>(config);
    return std::make_unique<HashedEmbedder>(config);
}

inline EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config) {
    return make_embedder(config)->embed(text);
}

}  // namespace ira
