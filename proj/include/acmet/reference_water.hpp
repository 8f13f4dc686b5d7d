#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"
#include "acmet/detail/polyfit.hpp"

namespace acmet::refwater {

/// Reference speed of sound in pure (distilled, deaerated) water at
/// atmospheric pressure, as a polynomial in temperature. Serves as the
/// calibration ground truth; immutable after construction.
class ReferenceCurve {
public:
    ReferenceCurve(std::vector<double> coefficients, double t_min_c, double t_max_c)
        : coeffs_(std::move(coefficients)), t_min_(t_min_c), t_max_(t_max_c) {
        if (coeffs_.empty()) throw std::invalid_argument("reference curve: no coefficients");
        if (!(t_min_ < t_max_)) throw std::invalid_argument("reference curve: degenerate range");
    }

    /// Del Grosso & Mader fifth-degree polynomial, valid 0..40 degC here
    /// (the physical c(T) maximum near 74 degC stays well outside).
    static ReferenceCurve delgrosso_mader() {
        return ReferenceCurve({1402.388, 5.03711, -5.80852e-2, 3.3420e-4, -1.47800e-6, 3.14643e-9},
                              0.0, 40.0);
    }

    /// Speed of sound in m/s at temperature T in degC. Out-of-range input is
    /// an error, never an extrapolation.
    double speed(double temp_c) const {
        check_range(temp_c);
        return detail::polyval(coeffs_, temp_c);
    }

    /// Analytic dc/dT in (m/s)/degC.
    double slope(double temp_c) const {
        check_range(temp_c);
        return detail::polyval(detail::polyder(coeffs_), temp_c);
    }

    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    bool in_range(double temp_c) const { return temp_c >= t_min_ && temp_c <= t_max_; }

    // Curve file: CSV with header degree,coefficient, one row per term.
    static ReferenceCurve load(const std::string& path, double t_min_c = 0.0,
                               double t_max_c = 40.0) {
        const csv::Table t = csv::read_file(path);
        if (t.header != std::vector<std::string>{"degree", "coefficient"}) {
            throw std::runtime_error(path + ": expected header degree,coefficient");
        }
        std::vector<double> coeffs;
        for (const auto& row : t.rows) {
            if (row.size() != 2) throw std::runtime_error(path + ": malformed row");
            const int deg = static_cast<int>(csv::parse_num(row[0], path));
            if (deg < 0) throw std::runtime_error(path + ": negative degree");
            if (coeffs.size() <= static_cast<std::size_t>(deg)) coeffs.resize(deg + 1, 0.0);
            coeffs[deg] = csv::parse_num(row[1], path);
        }
        return ReferenceCurve(std::move(coeffs), t_min_c, t_max_c);
    }

    void save(const std::string& path) const {
        csv::Table t;
        t.header = {"degree", "coefficient"};
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            t.rows.push_back({std::to_string(i), detail::num_roundtrip(coeffs_[i])});
        }
        csv::write_file(path, t);
    }

private:
    void check_range(double temp_c) const {
        if (!in_range(temp_c)) {
            throw std::domain_error("temperature " + detail::num6(temp_c) +
                                    " degC outside reference curve range [" +
                                    detail::num6(t_min_) + ", " + detail::num6(t_max_) + "] degC");
        }
    }

    std::vector<double> coeffs_;
    double t_min_;
    double t_max_;
};

inline double pure_water_speed(const ReferenceCurve& curve, double temp_c) {
    return curve.speed(temp_c);
}

inline double pure_water_speed_slope(const ReferenceCurve& curve, double temp_c) {
    return curve.slope(temp_c);
}

}  // namespace acmet::refwater
