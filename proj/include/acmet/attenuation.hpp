#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"
#include "acmet/detail/polyfit.hpp"

namespace acmet::atten {

// 20*log10(e) to four significant digits
inline constexpr double np_to_db_factor = 8.686;

inline double np_to_db(double alpha_np_per_m) { return np_to_db_factor * alpha_np_per_m; }

/// Attenuation from a pulse-echo amplitude pair: the received amplitude A of
/// an echo whose lossless level would be A0*R after a round trip of `path_m`
/// (the full travelled distance, 2L for one reflection).
inline double estimate_alpha(double a0, double a, double reflection_coeff, double path_m) {
    if (!(a0 > 0.0)) throw std::invalid_argument("estimate_alpha: reference amplitude must be > 0");
    if (!(reflection_coeff > 0.0) || reflection_coeff > 1.0)
        throw std::invalid_argument("estimate_alpha: reflection coefficient must be in (0, 1]");
    if (!(path_m > 0.0)) throw std::invalid_argument("estimate_alpha: path must be > 0");
    if (a <= 0.0)
        throw std::domain_error("estimate_alpha: zero received amplitude (infinite attenuation)");
    const double lossless = a0 * reflection_coeff;
    if (a > lossless)
        throw std::domain_error("estimate_alpha: received amplitude above lossless level "
                                "(negative attenuation)");
    return -std::log(a / lossless) / path_m;
}

/// alpha(f) = a1 * f^b with f in MHz; a1 is the coefficient at 1 MHz.
struct AttenuationModel {
    double a1_db_per_m = 0.0;
    double exponent = 0.0;
};

/// Least squares on (ln f, ln alpha); exact on noiseless power-law data.
inline AttenuationModel fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_power_law: need at least 2 points");
    std::vector<double> lf, la;
    lf.reserve(points.size());
    la.reserve(points.size());
    for (const auto& [f, alpha] : points) {
        if (!(f > 0.0)) throw std::invalid_argument("fit_power_law: non-positive frequency");
        if (!(alpha > 0.0))
            throw std::invalid_argument("fit_power_law: non-positive attenuation (log undefined)");
        lf.push_back(std::log(f));
        la.push_back(std::log(alpha));
    }
    {
        auto sorted = lf;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("fit_power_law: frequencies must be distinct");
    }
    const auto c = detail::polyfit(lf, la, 1);
    return {std::exp(c[0]), c[1]};
}

inline double eval_power_law(const AttenuationModel& model, double f_mhz) {
    if (!(f_mhz > 0.0)) throw std::invalid_argument("eval_power_law: frequency must be > 0");
    return model.a1_db_per_m * std::pow(f_mhz, model.exponent);
}

// Attenuation data file: freq_MHz,alpha_dB_per_m
inline std::vector<std::pair<double, double>> load_points(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header != std::vector<std::string>{"freq_MHz", "alpha_dB_per_m"})
        throw std::runtime_error(path + ": expected header freq_MHz,alpha_dB_per_m");
    std::vector<std::pair<double, double>> points;
    points.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path + ":" + std::to_string(t.row_lines[i]);
        if (row.size() != 2) throw std::runtime_error(ctx + ": expected 2 fields");
        points.emplace_back(csv::parse_num(row[0], ctx), csv::parse_num(row[1], ctx));
    }
    return points;
}

inline void save_points(const std::string& path,
                        const std::vector<std::pair<double, double>>& points) {
    csv::Table t;
    t.header = {"freq_MHz", "alpha_dB_per_m"};
    for (const auto& [f, a] : points)
        t.rows.push_back({detail::num_roundtrip(f), detail::num_roundtrip(a)});
    csv::write_file(path, t);
}

}  // namespace acmet::atten
