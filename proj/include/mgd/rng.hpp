#pragma once

#include <cmath>
#include <cstdint>

namespace mgd {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return splitmix64(s);
}

// Counter-based generator: the full state is one u64, so checkpoints can
// capture and restore it exactly. Every random draw in the project goes
// through this type; nothing uses std:: distributions.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    static Rng child(uint64_t seed, uint64_t stream) { return Rng(mix_seed(seed, stream)); }

    uint64_t next_u64() { return splitmix64(state_); }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

    // [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int64_t(mul_shift(next_u64(), span));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller without the cached spare: two uniforms per draw keeps the
    // state a single counter.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static uint64_t mul_shift(uint64_t x, uint64_t n) {
        return uint64_t((static_cast<unsigned __int128>(x) * n) >> 64);
    }

    uint64_t state_;
};

}  // namespace mgd
