#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace conekg {

// Deterministic random helpers on top of std::mt19937_64.
//
// The std distribution adaptors (uniform_int_distribution etc.) are
// implementation-defined, so two standard libraries can emit different
// streams from the same engine. Everything that feeds trained parameters or
// fixtures goes through these helpers instead, keeping checkpoints
// bit-identical for a given seed on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n), n >= 1. Rejection sampling removes the
    // modulo bias without depending on library internals.
    uint64_t uniform_u64(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    int uniform_int(int n) { return static_cast<int>(uniform_u64(static_cast<uint64_t>(n))); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent, reproducible stream (e.g. one per training
    // phase) without correlating with the parent stream.
    Rng fork(uint64_t stream_id) {
        return Rng(splitmix(engine_() ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1))));
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace conekg
