/*
 * rng.hpp
 *
 * Seeded randomness with fully specified draw algorithms. The engine is
 * std::mt19937_64 (bit-exact per the standard); bounded-int, uniform and
 * gaussian draws are hand-rolled here because the std distributions are
 * implementation-defined and would break byte-identical reruns across
 * toolchains. Streams are split with SplitMix64 so per-vehicle seeds are
 * independent of worker scheduling.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace v2g {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// derive an independent stream seed from a master seed and a stream id
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), multiply-shift reduction
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    // standard normal via Box-Muller (the second variate is discarded so the
    // draw count per call is fixed)
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * gaussian()); }

    double exponential(double mean) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return -mean * std::log(u);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace v2g
