#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eldiv {

// 64-bit finalizer used to derive independent per-replication streams from a
// master seed: identical (seed, rep) always yields the same stream, and the
// result does not depend on which thread executes the replication.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t rep) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (rep + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-replication random stream: a 64-bit Mersenne Twister as the uniform
// source with explicit samplers layered on top, so draws are reproducible
// across platforms and standard-library versions.
class RepRng {
public:
    explicit RepRng(std::uint64_t stream_seed) : eng_(stream_seed) {}

    RepRng(std::uint64_t master_seed, std::uint64_t rep)
        : eng_(mix_seed(master_seed, rep)) {}

    // Uniform on (0, 1), never exactly 0 or 1.
    double uniform() {
        constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
        std::uint64_t bits = eng_() >> 11;                  // 53 random bits
        return (static_cast<double>(bits) + 0.5) * scale;
    }

    // Standard normal via Box-Muller, caching the second deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Chi-square with 5 degrees of freedom: sum of five squared normals.
    double chi_square_5() {
        double s = 0.0;
        for (int i = 0; i < 5; ++i) {
            double z = normal();
            s += z * z;
        }
        return s;
    }

    // Student t with 5 degrees of freedom.
    double student_t5() { return normal() / std::sqrt(chi_square_5() / 5.0); }

    // Poisson with unit mean by sequential inversion.
    int poisson1() {
        double u = uniform();
        double p = std::exp(-1.0);
        double cum = p;
        int k = 0;
        while (u > cum && k < 200) {
            ++k;
            p /= static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace eldiv
