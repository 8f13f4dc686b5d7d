#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"
#include "acmet/detail/polyfit.hpp"

namespace acmet::turbidity {

inline constexpr int max_samples = 16;

struct Sample {
    double reading = 0.0;            // instrument units
    double concentration_ppm = 0.0;  // 1 mg/L = 1 ppm
    bool enabled = true;
};

/// Up to 16 calibration samples; entries can be edited or disabled without
/// being removed, and disabled samples have no influence on fitted curves.
class SampleSet {
public:
    void add(Sample s) {
        if (samples_.size() >= max_samples)
            throw std::length_error("sample set: a set holds at most 16 samples");
        check(s);
        samples_.push_back(s);
    }

    void edit(std::size_t index, Sample s) {
        check(s);
        samples_.at(index) = s;
    }

    void set_enabled(std::size_t index, bool enabled) { samples_.at(index).enabled = enabled; }

    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    std::vector<Sample> enabled_samples() const {
        std::vector<Sample> out;
        for (const auto& s : samples_)
            if (s.enabled) out.push_back(s);
        return out;
    }

private:
    static void check(const Sample& s) {
        if (s.concentration_ppm < 0.0)
            throw std::invalid_argument("sample set: negative concentration");
    }

    std::vector<Sample> samples_;
};

/// Concentrations of a dilution series: full scale times each fraction.
inline std::vector<double> dilution_series(double full_scale_ppm,
                                           const std::vector<double>& fractions) {
    if (full_scale_ppm < 0.0) throw std::invalid_argument("dilution_series: negative full scale");
    std::vector<double> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        if (f < 0.0 || f > 1.0)
            throw std::invalid_argument("dilution_series: fraction outside [0, 1]");
        out.push_back(full_scale_ppm * f);
    }
    return out;
}

/// Suspended-solids concentration of a stirred sample: 1 mg/L = 1 ppm.
inline double mass_to_ppm(double mass_g, double volume_l) {
    if (!(volume_l > 0.0)) throw std::invalid_argument("mass_to_ppm: volume must be positive");
    if (mass_g < 0.0) throw std::invalid_argument("mass_to_ppm: negative mass");
    return mass_g * 1000.0 / volume_l;
}

enum class CurveMode { lookup, polynomial };

/// Concentration curve over instrument readings: either a piecewise-linear
/// lookup table or a least-squares polynomial of degree 1 to 4.
struct CalCurve {
    CurveMode mode = CurveMode::lookup;
    int degree = 0;  // polynomial mode only
    double reading_center = 0.0;
    double reading_scale = 1.0;
    std::vector<double> coefficients;                // normalized-reading basis
    std::vector<std::pair<double, double>> nodes;    // lookup mode, sorted by reading
    double reading_min = 0.0;
    double reading_max = 0.0;
};

inline CalCurve fit_curve(const SampleSet& set, CurveMode mode, int degree = 1) {
    const auto enabled = set.enabled_samples();
    {
        std::vector<double> readings;
        for (const auto& s : enabled) readings.push_back(s.reading);
        std::sort(readings.begin(), readings.end());
        if (std::adjacent_find(readings.begin(), readings.end()) != readings.end())
            throw std::invalid_argument("fit_curve: duplicate readings among enabled samples");
    }

    CalCurve curve;
    curve.mode = mode;
    if (mode == CurveMode::polynomial) {
        if (degree < 1 || degree > 4)
            throw std::invalid_argument("fit_curve: polynomial degree must be in [1, 4]");
        if (enabled.size() < static_cast<std::size_t>(degree) + 1)
            throw std::invalid_argument("fit_curve: need at least degree+1 enabled samples");
        curve.degree = degree;
        std::vector<double> x, y;
        for (const auto& s : enabled) {
            x.push_back(s.reading);
            y.push_back(s.concentration_ppm);
        }
        curve.reading_min = *std::min_element(x.begin(), x.end());
        curve.reading_max = *std::max_element(x.begin(), x.end());
        curve.reading_center = 0.5 * (curve.reading_min + curve.reading_max);
        curve.reading_scale = 0.5 * (curve.reading_max - curve.reading_min);
        if (!(curve.reading_scale > 0.0))
            throw std::invalid_argument("fit_curve: degenerate reading span");
        for (auto& v : x) v = (v - curve.reading_center) / curve.reading_scale;
        curve.coefficients = detail::polyfit(x, y, degree);
    } else {
        if (enabled.size() < 2)
            throw std::invalid_argument("fit_curve: lookup table needs at least 2 enabled samples");
        for (const auto& s : enabled) curve.nodes.emplace_back(s.reading, s.concentration_ppm);
        std::sort(curve.nodes.begin(), curve.nodes.end());
        curve.reading_min = curve.nodes.front().first;
        curve.reading_max = curve.nodes.back().first;
    }
    return curve;
}

struct ConcentrationResult {
    double ppm = 0.0;
    bool clamped = false;  // lookup evaluated outside its node span
};

/// Evaluate the curve. Lookup tables clamp outside their span (flagged);
/// polynomials accept a 5%-of-span extension and refuse anything beyond.
inline ConcentrationResult concentration(const CalCurve& curve, double reading) {
    if (curve.mode == CurveMode::lookup) {
        if (curve.nodes.empty()) throw std::logic_error("concentration: empty lookup curve");
        if (reading <= curve.reading_min) {
            return {curve.nodes.front().second, reading < curve.reading_min};
        }
        if (reading >= curve.reading_max) {
            return {curve.nodes.back().second, reading > curve.reading_max};
        }
        for (std::size_t i = 1; i < curve.nodes.size(); ++i) {
            const auto& [x0, y0] = curve.nodes[i - 1];
            const auto& [x1, y1] = curve.nodes[i];
            if (reading == x0) return {y0, false};
            if (reading == x1) return {y1, false};
            if (reading < x1) {
                const double t = (reading - x0) / (x1 - x0);
                return {y0 + t * (y1 - y0), false};
            }
        }
        return {curve.nodes.back().second, false};  // unreachable
    }
    const double span = curve.reading_max - curve.reading_min;
    const double slack = 0.05 * span;
    if (reading < curve.reading_min - slack || reading > curve.reading_max + slack) {
        throw std::domain_error("concentration: reading " + detail::num6(reading) +
                                " beyond fitted span [" + detail::num6(curve.reading_min) + ", " +
                                detail::num6(curve.reading_max) + "] + 5%");
    }
    return {detail::polyval(curve.coefficients,
                            (reading - curve.reading_center) / curve.reading_scale),
            false};
}

struct DeviceSpec {
    double reduced_error_pct = 4.0;  // basic reduced error, % of full scale
    double sensitivity_pct = 2.0;
};

struct LimitVerdict {
    bool pass = false;
    double margin_pct = 0.0;
};

struct DeviceVerdict {
    LimitVerdict reduced_error;
    LimitVerdict sensitivity;
};

/// Boundary-inclusive per-limit check of a measured relative error.
inline DeviceVerdict check_device_spec(double measured_rel_error_pct,
                                       const DeviceSpec& spec = {}) {
    if (!(spec.reduced_error_pct > 0.0) || !(spec.sensitivity_pct > 0.0))
        throw std::invalid_argument("check_device_spec: spec limits must be positive");
    const double m = std::abs(measured_rel_error_pct);
    return {{m <= spec.reduced_error_pct, spec.reduced_error_pct - m},
            {m <= spec.sensitivity_pct, spec.sensitivity_pct - m}};
}

// Sample file: reading,concentration_ppm,enabled with enabled in {0,1}
inline SampleSet load_samples(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header != std::vector<std::string>{"reading", "concentration_ppm", "enabled"})
        throw std::runtime_error(path + ": expected header reading,concentration_ppm,enabled");
    SampleSet set;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path + ":" + std::to_string(t.row_lines[i]);
        if (row.size() != 3) throw std::runtime_error(ctx + ": expected 3 fields");
        const double enabled = csv::parse_num(row[2], ctx);
        if (enabled != 0.0 && enabled != 1.0)
            throw std::runtime_error(ctx + ": enabled flag must be 0 or 1");
        set.add({csv::parse_num(row[0], ctx), csv::parse_num(row[1], ctx), enabled == 1.0});
    }
    return set;
}

inline void save_samples(const std::string& path, const SampleSet& set) {
    csv::Table t;
    t.header = {"reading", "concentration_ppm", "enabled"};
    for (const auto& s : set.samples()) {
        t.rows.push_back({detail::num_roundtrip(s.reading),
                          detail::num_roundtrip(s.concentration_ppm), s.enabled ? "1" : "0"});
    }
    csv::write_file(path, t);
}

}  // namespace acmet::turbidity
