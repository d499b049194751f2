// Shared small utilities: intervals, RNG, parallel loops, number formatting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mlhr {

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

struct Interval {
    double lo{0.0};
    double hi{1.0};

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return std::min(hi, std::max(lo, x)); }
    // Maps u in [0,1] to [lo,hi].
    double denorm(double u) const { return lo + u * (hi - lo); }
    double norm(double x) const { return width() > 0.0 ? (x - lo) / width() : 0.0; }
};

// Deterministic RNG. Wraps mt19937_64 with hand-rolled draws so that the
// stream does not depend on the standard library's distribution
// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n == 0");
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % n);
    }

    // Standard normal via the polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

// Runs fn(i) for i in [0,n). Results must be written by index; the split is
// static so output is identical for any worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += nw) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Fixed 9-significant-digit formatting used by every CSV/JSON emitter so that
// reruns are byte-identical.
inline std::string format9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return std::string(buf);
}

// Rounds through the 9-digit textual form; values stored in JSON documents go
// through this so the files carry the same precision as the CSVs.
inline double round9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return std::strtod(buf, nullptr);
}

}  // namespace mlhr
