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

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ira {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two vectors (or an embedder/index pair) disagree on dimensionality
/// or embedder configuration.
class MismatchError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (files, records, duplicate ids).
class DataError : public Error {
public:
    using Error::Error;
};

/// Persisted payload written by an unknown format version.
class VersionError : public DataError {
public:
    using DataError::DataError;
};

/// FNV-1a 64-bit hash. Stable across platforms and processes.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic RNG with platform-independent output. Distribution
/// helpers are implemented by hand so results do not depend on the
/// standard library's <random> internals.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent child stream, e.g. one per user.
    RandomSource fork(std::uint64_t salt) const {
        return RandomSource(splitmix64(state_ ^ splitmix64(salt)));
    }

    std::uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        // Rejection sampling over the top bits; bias-free.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by RandomSource. Used instead of
/// std::shuffle, whose standard-engine output differs across libraries.
template <typename T>
void shuffle(std::vector<T>& values, RandomSource& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

/// k distinct values drawn from [0, n) in random order (k <= n).
inline std::vector<std::uint32_t> sample_distinct(std::uint32_t n, std::uint32_t k,
                                                  RandomSource& rng) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (std::uint32_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::uint32_t>(rng.next_below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

/// Metric formatted to four decimals, the precision used in report tables.
inline std::string format_metric(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    return buffer;
}

/// Left-aligned fixed-width table cell (single trailing space separator).
inline std::string format_cell(std::string text, std::size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text + ' ';
}

}  // namespace ira
