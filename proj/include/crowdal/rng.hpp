#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace crowdal {

// splitmix64 finalizer. Used as the documented seed-splitting rule:
// derived seeds depend only on the inputs, never on scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash64(std::uint64_t seed, std::uint64_t a) {
    return mix64(seed ^ mix64(a));
}

inline std::uint64_t hash64(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return hash64(hash64(seed, a), b);
}

inline std::uint64_t hash64(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
    return hash64(hash64(seed, a, b), c);
}

// mt19937_64 with portable draws. std::uniform_*_distribution is
// implementation-defined, so bounded ints and unit doubles are derived
// from raw engine output directly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, n), unbiased via rejection
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // uniform in [0, 1) with 53-bit resolution
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    double normal() {
        // Box-Muller; one value per call keeps the draw count predictable
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Runs fn(i) for i in [0, n) across up to `threads` workers. Each index is
// independent; callers derive any randomness from per-index seeds, so the
// result is identical to sequential execution.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace crowdal
