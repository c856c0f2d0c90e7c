#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace fedsim {

// splitmix64 step. Fixed output for a given state on every platform, which is
// what makes whole-simulation byte-reproducibility possible; std::
// distributions are implementation-defined and must not be used anywhere in
// the library.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent child seed from (master, purpose, a, b). Client
// training streams use (master, "train", client_id, round) so that neither
// participation order nor worker scheduling can change results.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = master;
    splitmix64(s);
    for (char c : purpose) {
        s ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        splitmix64(s);
    }
    s ^= 0x5bd1e9955bd1e995ULL * (a + 1);
    splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    splitmix64(s);
    return splitmix64(s);
}

// Minimal self-contained random stream: uniform, normal, Poisson.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Poisson via Knuth multiplication; large lambda is split additively to
    // keep exp(-lambda) away from underflow.
    std::uint64_t poisson(double lambda) {
        if (lambda > 30.0) {
            double half = lambda / 2.0;
            return poisson(half) + poisson(lambda - half);
        }
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fedsim
