#pragma once

#include <cmath>
#include <cstdint>

namespace dlp {

// Counter-based generator (splitmix64 core). We avoid std::normal_distribution
// so that seeded streams are reproducible across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        // modulo bias is irrelevant at our n << 2^64
        return n == 0 ? 0 : next_u64() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; one value per call, the pair partner is cached.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_cached_) {
            has_cached_ = false;
            return mean + stddev * cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Derive an independent stream, e.g. per domain or per epoch.
    Rng fork(uint64_t stream_id) const {
        Rng child(state_ ^ (0xd1342543de82ef95ULL * (stream_id + 1)));
        child.next_u64();
        return child;
    }

    uint64_t state() const { return state_; }
    void restore(uint64_t state, bool has_cached = false, double cached = 0.0) {
        state_ = state;
        has_cached_ = has_cached;
        cached_ = cached;
    }
    bool has_cached() const { return has_cached_; }
    double cached_value() const { return cached_; }

private:
    uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace dlp
