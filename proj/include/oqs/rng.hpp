// rng.hpp — seeded random number generation. Gaussian variates use an
// explicit Box-Muller over mt19937_64 so equal seeds give equal streams on
// every platform (std::normal_distribution is implementation-defined).

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace oqs {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1].
    double uniform_open() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::complex<double> cgaussian() {
        const double re = gaussian();
        const double im = gaussian();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

    // Index into a discrete distribution given by nonnegative weights.
    template <typename Weights>
    int pick(const Weights& w) {
        double total = 0.0;
        for (double x : w) total += x;
        double u = uniform() * total;
        int last = 0;
        int idx = 0;
        for (double x : w) {
            if (u < x) return idx;
            u -= x;
            last = idx;
            ++idx;
        }
        return last;
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace oqs
