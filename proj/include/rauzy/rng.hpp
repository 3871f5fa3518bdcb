#pragma once

#include <cmath>
#include <cstdint>

namespace rauzy {

// Counter-based splittable generator. Every draw is a pure function of
// (seed, stream, counter), so independent work items can use disjoint
// streams without sharing mutable state, and results are reproducible
// across platforms.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + 0x632be59bd9b4e019ULL) ^
                   mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    std::uint64_t next_u64() {
        return mix(key_ + 0x9e3779b97f4a7c15ULL * ++n_);
    }

    // uniform on (0,1), never exactly 0 or 1
    double next_unit() {
        return double(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double next_exp() { return -std::log(next_unit()); }

    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // uniform integer in [lo, hi] inclusive
    long next_range(long lo, long hi) {
        return lo + long(next_below(std::uint64_t(hi - lo + 1)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t n_ = 0;
};

} // namespace rauzy
