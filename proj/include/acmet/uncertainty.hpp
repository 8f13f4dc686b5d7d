#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"

namespace acmet::budget {

/// Type A standard uncertainty of repeated observations. By the convention
/// used here this is the sample standard deviation itself (n-1 denominator);
/// pass of_mean = true for the usual s/sqrt(n) uncertainty of the mean.
inline double type_a(std::span<const double> samples, bool of_mean = false) {
    if (samples.size() < 2)
        throw std::invalid_argument("type_a: need at least 2 observations");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    double s = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    if (of_mean) s /= std::sqrt(static_cast<double>(samples.size()));
    return s;
}

/// Root-sum-square combination. Squares are accumulated in ascending order so
/// the result is independent of the component order.
inline double combine(double u_a, const std::vector<double>& u_b_components) {
    if (u_a < 0.0) throw std::invalid_argument("combine: negative type A component");
    std::vector<double> squares;
    squares.reserve(u_b_components.size());
    for (double u : u_b_components) {
        if (u < 0.0) throw std::invalid_argument("combine: negative type B component");
        squares.push_back(u * u);
    }
    std::sort(squares.begin(), squares.end());
    double ss = u_a * u_a;
    double acc = 0.0;
    for (double s : squares) acc += s;
    return std::sqrt(ss + acc);
}

inline double expand(double u_c, double coverage_k) {
    if (u_c < 0.0) throw std::invalid_argument("expand: negative combined uncertainty");
    if (!(coverage_k > 0.0)) throw std::invalid_argument("expand: coverage factor must be positive");
    return coverage_k * u_c;
}

struct UncertaintyBudget {
    double u_a = 0.0;
    std::vector<std::pair<std::string, double>> u_b_components;
    double u_c = 0.0;
    double coverage_k = 2.0;
    double expanded = 0.0;  // U = k * u_c
    int n_observations = 0;
};

inline UncertaintyBudget make_budget(std::span<const double> samples,
                                     std::vector<std::pair<std::string, double>> u_b_components,
                                     double coverage_k = 2.0, bool type_a_of_mean = false) {
    UncertaintyBudget b;
    b.u_a = type_a(samples, type_a_of_mean);
    b.u_b_components = std::move(u_b_components);
    std::vector<double> ub;
    ub.reserve(b.u_b_components.size());
    for (const auto& [label, u] : b.u_b_components) ub.push_back(u);
    b.u_c = combine(b.u_a, ub);
    b.coverage_k = coverage_k;
    b.expanded = expand(b.u_c, coverage_k);
    b.n_observations = static_cast<int>(samples.size());
    return b;
}

/// State primary / secondary standard figures for the sound-speed unit,
/// recorded as given: RMS over 15 independent measurements, type A/B/combined
/// and expanded uncertainty, and the non-excluded systematic error bound at
/// confidence P (no distributional model attached).
struct StandardFigures {
    double rms_cap_mps;
    int n_observations;
    double type_a_mps;
    double type_b_mps;
    double combined_mps;
    double coverage_k;
    double expanded_mps;
    double nonexcluded_systematic_mps;
    double confidence_p;
};

inline StandardFigures primary_standard() {
    return {0.005, 15, 0.005, 0.02, 0.02, 2.0, 0.04, 0.04, 0.99};
}

inline StandardFigures secondary_standard() {
    // type A/B split not published for the secondary standard; RMS cap and
    // systematic bound are the declared figures
    return {0.05, 15, 0.05, 0.0, 0.05, 2.0, 0.10, 0.08, 0.99};
}

// ---- declared spec sheets ----

enum class Quantity { sound_speed, temperature, pressure };

inline std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::sound_speed: return "sound_speed";
        case Quantity::temperature: return "temperature";
        case Quantity::pressure: return "pressure";
    }
    throw std::logic_error("bad quantity");
}

inline Quantity quantity_from_string(const std::string& s) {
    if (s == "sound_speed") return Quantity::sound_speed;
    if (s == "temperature") return Quantity::temperature;
    if (s == "pressure") return Quantity::pressure;
    throw std::runtime_error("unknown quantity '" + s + "'");
}

struct ChannelSpec {
    std::string name;
    Quantity quantity = Quantity::sound_speed;
    double range_min = 0.0;
    double range_max = 0.0;
    std::string units;
    std::optional<double> resolution;
    std::optional<double> calibration_error;
    std::optional<double> stability;
    std::optional<double> final_accuracy;
    std::optional<double> declared_error;
    std::optional<double> type_test_error;

    void validate() const {
        if (!(range_min < range_max))
            throw std::invalid_argument(name + ": degenerate range");
        for (const auto& f : {resolution, calibration_error, stability, final_accuracy,
                              declared_error, type_test_error}) {
            if (f && *f < 0.0) throw std::invalid_argument(name + ": negative error field");
        }
    }
};

enum class SpecField {
    resolution,
    calibration_error,
    stability,
    final_accuracy,
    declared_error,
    type_test_error
};

inline std::string to_string(SpecField f) {
    switch (f) {
        case SpecField::resolution: return "resolution";
        case SpecField::calibration_error: return "calibration_error";
        case SpecField::stability: return "stability";
        case SpecField::final_accuracy: return "final_accuracy";
        case SpecField::declared_error: return "declared_error";
        case SpecField::type_test_error: return "type_test_error";
    }
    throw std::logic_error("bad spec field");
}

inline SpecField spec_field_from_string(const std::string& s) {
    for (SpecField f : {SpecField::resolution, SpecField::calibration_error, SpecField::stability,
                        SpecField::final_accuracy, SpecField::declared_error,
                        SpecField::type_test_error}) {
        if (to_string(f) == s) return f;
    }
    throw std::runtime_error("unknown spec field '" + s + "'");
}

inline std::optional<double> field_value(const ChannelSpec& spec, SpecField f) {
    switch (f) {
        case SpecField::resolution: return spec.resolution;
        case SpecField::calibration_error: return spec.calibration_error;
        case SpecField::stability: return spec.stability;
        case SpecField::final_accuracy: return spec.final_accuracy;
        case SpecField::declared_error: return spec.declared_error;
        case SpecField::type_test_error: return spec.type_test_error;
    }
    throw std::logic_error("bad spec field");
}

struct Verdict {
    bool pass = false;
    double margin = 0.0;  // limit - |measured|
};

/// Boundary-inclusive limit check: pass iff |measured| <= limit.
inline Verdict check_conformance(double measured_error, const std::string& measured_units,
                                 const ChannelSpec& spec, SpecField field) {
    if (measured_units != spec.units)
        throw std::invalid_argument("check_conformance: units '" + measured_units +
                                    "' do not match spec units '" + spec.units + "'");
    const auto limit = field_value(spec, field);
    if (!limit)
        throw std::invalid_argument("check_conformance: spec '" + spec.name + "' has no " +
                                    to_string(field));
    const double m = std::abs(measured_error);
    return {m <= *limit, *limit - m};
}

/// Additive budget check: final accuracy must equal calibration error plus
/// stability (exactly, up to floating-point representation).
inline Verdict table1_consistency(const ChannelSpec& spec) {
    if (!spec.calibration_error || !spec.stability || !spec.final_accuracy)
        throw std::invalid_argument("table1_consistency: '" + spec.name +
                                    "' is missing calibration_error, stability or final_accuracy");
    const double sum = *spec.calibration_error + *spec.stability;
    const double diff = *spec.final_accuracy - sum;
    const double tol = 1e-12 * std::max(1.0, std::abs(*spec.final_accuracy));
    return {std::abs(diff) <= tol, -std::abs(diff)};
}

// ---- spec database file ----

inline const std::vector<std::string>& spec_db_header() {
    static const std::vector<std::string> h = {
        "name",        "quantity",          "range_min", "range_max",
        "units",       "resolution",        "calibration_error",
        "stability",   "final_accuracy",    "declared_error",
        "type_test_error"};
    return h;
}

inline std::vector<ChannelSpec> parse_spec_db(const csv::Table& t, const std::string& ctx) {
    if (t.header != spec_db_header())
        throw std::runtime_error(ctx + ": unexpected spec database header");
    std::vector<ChannelSpec> specs;
    specs.reserve(t.rows.size());
    const auto opt = [&](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return csv::parse_num(s, ctx);
    };
    for (const auto& row : t.rows) {
        if (row.size() != spec_db_header().size())
            throw std::runtime_error(ctx + ": wrong field count in row");
        ChannelSpec s;
        s.name = row[0];
        s.quantity = quantity_from_string(row[1]);
        s.range_min = csv::parse_num(row[2], ctx);
        s.range_max = csv::parse_num(row[3], ctx);
        s.units = row[4];
        s.resolution = opt(row[5]);
        s.calibration_error = opt(row[6]);
        s.stability = opt(row[7]);
        s.final_accuracy = opt(row[8]);
        s.declared_error = opt(row[9]);
        s.type_test_error = opt(row[10]);
        s.validate();
        specs.push_back(std::move(s));
    }
    return specs;
}

inline std::vector<ChannelSpec> load_spec_db(const std::string& path) {
    return parse_spec_db(csv::read_file(path), path);
}

inline std::string spec_db_to_string(const std::vector<ChannelSpec>& specs) {
    csv::Table t;
    t.header = spec_db_header();
    const auto opt = [](const std::optional<double>& v) {
        return v ? detail::num_roundtrip(*v) : std::string();
    };
    for (const auto& s : specs) {
        t.rows.push_back({s.name, to_string(s.quantity), detail::num_roundtrip(s.range_min),
                          detail::num_roundtrip(s.range_max), s.units, opt(s.resolution),
                          opt(s.calibration_error), opt(s.stability), opt(s.final_accuracy),
                          opt(s.declared_error), opt(s.type_test_error)});
    }
    return csv::to_string(t);
}

inline void save_spec_db(const std::string& path, const std::vector<ChannelSpec>& specs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << spec_db_to_string(specs);
}

}  // namespace acmet::budget
