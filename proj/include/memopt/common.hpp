#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace memopt {

// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parse failure in a line-oriented text format; carries the 1-based line number.
class ParseError : public DataError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : DataError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Deterministic RNG used by every stochastic component.
//
// All randomness flows through these two primitives so that runs are
// reproducible across platforms: mt19937_64 output is standard-specified,
// whereas std::uniform_*_distribution is not.
//   uniform01: 53-bit mantissa draw in [0,1)
//   uniformInt(n): eng() % n (modulo bias is ~n/2^64, irrelevant here)
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    std::uint64_t uniformInt(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

// Round-trip formatting for doubles in CSV output.
inline std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Runs fn(i) for i in [0,n) on up to `jobs` threads. fn must be pure with
// respect to shared state; results are identical for any jobs >= 1.
inline void parallelFor(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned nthreads = std::min<std::size_t>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace memopt
