#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace acmet::detail {

// Seeded Gaussian source. Box-Muller on top of mt19937_64 instead of
// std::normal_distribution, whose output is implementation-defined;
// this keeps fixtures and golden files stable across standard libraries.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace acmet::detail
