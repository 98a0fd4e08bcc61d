#pragma once

#include <cstdlib>
#include <random>

namespace geomech {

/// Deterministic RNG used by the random-sample invariant checks.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(eng_);
    }

    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(eng_);
    }

  private:
    std::mt19937_64 eng_;
};

/// Seed for invariant checks; override with the GEOMECH_SEED env var.
inline std::uint64_t checks_seed() {
    if (const char* s = std::getenv("GEOMECH_SEED")) return std::strtoull(s, nullptr, 10);
    return 20260808ull;
}

}  // namespace geomech
