/*
 * Copyright 2026 wcnet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace wcnet {

/// Configuration is malformed or inconsistent (exit code 2 in the CLI).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a precondition (exit code 3 in the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unexpected internal failure (exit code 4 in the CLI).
class InternalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* library_version = "0.1.0";

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {
/// Fixed-format rendering for delimited outputs; identical inputs render to
/// identical bytes, which the run-level determinism contract relies on.
inline std::string format_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}
}  // namespace detail

/// FNV-1a 64-bit hash, used for input fingerprints and child-seed derivation.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

namespace detail {
inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    unsigned char buf[8];
    std::memcpy(buf, &v, 8);
    return fnv1a64(buf, 8, h);
}
inline std::uint64_t seed_fold(std::uint64_t h, std::uint64_t v) { return hash_mix(h, v); }
inline std::uint64_t seed_fold(std::uint64_t h, std::string_view s) { return fnv1a64(s, h); }
}  // namespace detail

/// Derives a child seed from a master seed and a sequence of tags
/// (stage name, window label, band label, replicate index, ...).
/// Stable across runs and platforms, so adding one stage or band does not
/// perturb the random streams of the others.
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t master, Tags&&... tags) {
    std::uint64_t h = detail::hash_mix(0xcbf29ce484222325ull, master);
    ((h = detail::seed_fold(h, std::forward<Tags>(tags))), ...);
    return h;
}

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads
/// (0 = hardware concurrency). Each index must write only its own slots,
/// which keeps results independent of the scheduling.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (threads == 0) threads = hw ? hw : 1;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error;
    std::mutex err_mtx;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mtx);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace wcnet
