#pragma once

#include <cstdint>

namespace mc2d {

// xoshiro256++ with splitmix64 seeding. Shard streams are derived from
// (master seed, shard index) so results are reproducible for a fixed shard
// plan regardless of how many worker threads execute it.
class Rng {
public:
    explicit Rng(uint64_t seed) { seed_from(seed); }
    Rng(uint64_t master_seed, uint64_t stream) {
        seed_from(master_seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL));
    }

    uint64_t next_u64() {
        uint64_t const result = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t const t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    static constexpr uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void seed_from(uint64_t s) {
        for (auto& w : s_) {
            s += 0x9e3779b97f4a7c15ULL;
            uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    uint64_t s_[4];
};

} // namespace mc2d
