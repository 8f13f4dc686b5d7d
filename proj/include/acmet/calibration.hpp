#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acmet/channel.hpp"
#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"
#include "acmet/detail/polyfit.hpp"
#include "acmet/detail/random.hpp"
#include "acmet/reference_water.hpp"

namespace acmet::calib {

enum class TimingMethod { exact, threshold_crossing, correlation };

/// Virtual instrument driven by the thermostat protocol. `exact` timing takes
/// the closed-form echo-pair delay 2*dL/c; the other two run the full
/// synthesize/detect/estimate chain. Code noise is Gaussian jitter on the
/// counter reading, expressed as its speed equivalent at the operating point.
struct InstrumentSim {
    channel::ChannelGeometry geometry;
    channel::Pulse pulse = {};
    double sample_rate_hz = 0.0;  // 0 -> 10x carrier
    TimingMethod timing = TimingMethod::exact;
    double detect_threshold = 0.25;
    bool quantize_codes = true;
    double code_noise_mps = 0.0;
    double waveform_noise_std = 0.0;
};

struct CalibrationPoint {
    double temperature_c = 0.0;
    double code = 0.0;  // mean counter reading over replicates
    int replicates = 1;
    double code_std = 0.0;
};

/// Fitted c(N) polynomial in normalized code z = (N - code_center)/code_scale.
struct RegressionModel {
    int degree = 0;
    std::vector<double> coefficients;
    double code_center = 0.0;
    double code_scale = 1.0;
    double rmse = 0.0;
    double code_min = 0.0;
    double code_max = 0.0;
};

inline std::vector<double> default_temperature_grid() {
    return {4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0};
}

// One protocol step: replicate counter readings at a fixed true speed.
inline std::vector<double> simulate_codes(const InstrumentSim& sim, double sound_speed_mps,
                                          int replicates, std::uint64_t waveform_seed,
                                          detail::GaussianRng& jitter_rng) {
    const auto& geom = sim.geometry;
    geom.validate();
    if (replicates < 1) throw std::invalid_argument("simulate_codes: replicates must be >= 1");

    const auto measure_once = [&](std::uint64_t seed) {
        switch (sim.timing) {
            case TimingMethod::exact:
                return 2.0 * geom.base_length_m() / sound_speed_mps;
            case TimingMethod::threshold_crossing: {
                const auto rec = channel::synthesize_echoes(geom, sound_speed_mps, 0.0, sim.pulse,
                                                            sim.waveform_noise_std, seed,
                                                            sim.sample_rate_hz);
                const auto times = channel::detect_tof_threshold(rec, sim.detect_threshold);
                if (times.size() < 2)
                    throw std::runtime_error("simulate_codes: echo pair not detected");
                return times[1] - times[0];
            }
            case TimingMethod::correlation: {
                const auto rec = channel::synthesize_echoes(geom, sound_speed_mps, 0.0, sim.pulse,
                                                            sim.waveform_noise_std, seed,
                                                            sim.sample_rate_hz);
                return channel::measure_echo_pair_delay(rec, sim.detect_threshold);
            }
        }
        throw std::logic_error("simulate_codes: bad timing method");
    };

    // per-replicate waveforms only when waveform noise makes them differ
    const bool per_replicate_waveform =
        sim.timing != TimingMethod::exact && sim.waveform_noise_std > 0.0;
    double dt_shared = per_replicate_waveform ? 0.0 : measure_once(waveform_seed);

    const double code_sigma =
        sim.code_noise_mps > 0.0
            ? sim.code_noise_mps / channel::velocity_quantization(geom, sound_speed_mps)
            : 0.0;

    std::vector<double> codes;
    codes.reserve(replicates);
    for (int r = 0; r < replicates; ++r) {
        const double dt =
            per_replicate_waveform ? measure_once(waveform_seed + static_cast<std::uint64_t>(r) + 1)
                                   : dt_shared;
        double q = dt / geom.timer_resolution_s;
        if (code_sigma > 0.0) q += code_sigma * jitter_rng.gaussian();
        if (sim.quantize_codes) {
            q = static_cast<double>(channel::code_from_time(q * geom.timer_resolution_s, geom).count);
        }
        codes.push_back(q);
    }
    return codes;
}

/// Thermostat protocol: at each temperature level, measure the code with the
/// instrument at the reference speed for that temperature; record the mean
/// code and the replicate dispersion. Deterministic per seed.
inline std::vector<CalibrationPoint> run_protocol(const InstrumentSim& sim,
                                                  const refwater::ReferenceCurve& ref,
                                                  const std::vector<double>& temperatures_c,
                                                  int replicates, std::uint64_t seed) {
    if (replicates < 1) throw std::invalid_argument("run_protocol: replicates must be >= 1");
    std::mt19937_64 seeder(seed);
    std::vector<CalibrationPoint> points;
    points.reserve(temperatures_c.size());
    for (const double temp : temperatures_c) {
        const double c_true = ref.speed(temp);  // throws outside the valid range
        const std::uint64_t wseed = seeder();
        detail::GaussianRng jitter(seeder());
        const auto codes = simulate_codes(sim, c_true, replicates, wseed, jitter);

        double mean = 0.0;
        for (double c : codes) mean += c;
        mean /= static_cast<double>(codes.size());
        double var = 0.0;
        for (double c : codes) var += (c - mean) * (c - mean);
        const double stdev =
            codes.size() > 1 ? std::sqrt(var / static_cast<double>(codes.size() - 1)) : 0.0;

        points.push_back({temp, mean, replicates, stdev});
    }
    return points;
}

/// Least-squares fit of reference speed against instrument code. Codes are
/// center/scale normalized before fitting; raw codes near 1e6 would wreck the
/// conditioning of the Vandermonde system at degree >= 3.
inline RegressionModel fit_speed_vs_code(const std::vector<CalibrationPoint>& points,
                                         const refwater::ReferenceCurve& ref, int degree) {
    if (degree < 1) throw std::invalid_argument("fit_speed_vs_code: degree must be >= 1");
    if (points.size() < static_cast<std::size_t>(degree) + 1)
        throw std::invalid_argument("fit_speed_vs_code: underdetermined (need degree+1 points)");

    std::vector<double> codes(points.size()), speeds(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        codes[i] = points[i].code;
        speeds[i] = ref.speed(points[i].temperature_c);
    }
    {
        auto sorted = codes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::runtime_error(
                "fit_speed_vs_code: repeated codes make the fit ill-conditioned");
    }

    RegressionModel model;
    model.degree = degree;
    model.code_min = *std::min_element(codes.begin(), codes.end());
    model.code_max = *std::max_element(codes.begin(), codes.end());
    model.code_center = 0.5 * (model.code_min + model.code_max);
    model.code_scale = 0.5 * (model.code_max - model.code_min);
    if (!(model.code_scale > 0.0))
        throw std::runtime_error("fit_speed_vs_code: degenerate code domain");

    std::vector<double> z(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
        z[i] = (codes[i] - model.code_center) / model.code_scale;
    model.coefficients = detail::polyfit(z, speeds, degree);

    double ss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = detail::polyval(model.coefficients, z[i]) - speeds[i];
        ss += r * r;
    }
    model.rmse = std::sqrt(ss / static_cast<double>(z.size()));
    return model;
}

/// Polynomial evaluation with a guard band around the fitted code domain
/// (default +-2% in code value); beyond that the model refuses to extrapolate.
inline double predict(const RegressionModel& model, double code, double domain_tolerance = 0.02) {
    const double lo = model.code_min * (1.0 - domain_tolerance);
    const double hi = model.code_max * (1.0 + domain_tolerance);
    if (code < lo || code > hi) {
        throw std::domain_error("predict: code " + detail::num6(code) +
                                " outside fitted domain [" + detail::num6(model.code_min) + ", " +
                                detail::num6(model.code_max) + "] (tolerance " +
                                detail::num6(domain_tolerance * 100.0) + "%)");
    }
    return detail::polyval(model.coefficients, (code - model.code_center) / model.code_scale);
}

/// Fit-minus-reference discrepancies (temperature, dc) per point.
inline std::vector<std::pair<double, double>> residuals(const RegressionModel& model,
                                                        const std::vector<CalibrationPoint>& points,
                                                        const refwater::ReferenceCurve& ref) {
    std::vector<std::pair<double, double>> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        const double fitted =
            detail::polyval(model.coefficients, (p.code - model.code_center) / model.code_scale);
        out.emplace_back(p.temperature_c, fitted - ref.speed(p.temperature_c));
    }
    return out;
}

// ---- calibration log and model files ----

struct LogRow {
    std::string timestamp;
    double temperature_c;
    double code;
};

inline void save_log(const std::string& path, const std::vector<LogRow>& rows) {
    csv::Table t;
    t.header = {"timestamp", "temperature_C", "code_N"};
    char code_buf[40];
    for (const auto& r : rows) {
        const double rounded = std::round(r.code);
        if (r.code == rounded)
            std::snprintf(code_buf, sizeof(code_buf), "%.0f", r.code);
        else
            std::snprintf(code_buf, sizeof(code_buf), "%.6f", r.code);
        t.rows.push_back({r.timestamp, detail::num_roundtrip(r.temperature_c), code_buf});
    }
    csv::write_file(path, t);
}

inline std::vector<LogRow> load_log(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header != std::vector<std::string>{"timestamp", "temperature_C", "code_N"})
        throw std::runtime_error(path + ": expected header timestamp,temperature_C,code_N");
    std::vector<LogRow> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path + ":" + std::to_string(t.row_lines[i]);
        if (row.size() != 3) throw std::runtime_error(ctx + ": expected 3 fields");
        rows.push_back({row[0], csv::parse_num(row[1], ctx), csv::parse_num(row[2], ctx)});
    }
    return rows;
}

/// Collapse replicate log rows into per-temperature calibration points
/// (grouped by temperature, in order of first appearance).
inline std::vector<CalibrationPoint> points_from_log(const std::vector<LogRow>& rows) {
    std::vector<double> temps;
    std::vector<std::vector<double>> groups;
    for (const auto& r : rows) {
        auto it = std::find(temps.begin(), temps.end(), r.temperature_c);
        if (it == temps.end()) {
            temps.push_back(r.temperature_c);
            groups.emplace_back();
            it = temps.end() - 1;
        }
        groups[static_cast<std::size_t>(it - temps.begin())].push_back(r.code);
    }
    std::vector<CalibrationPoint> points;
    points.reserve(temps.size());
    for (std::size_t g = 0; g < temps.size(); ++g) {
        const auto& codes = groups[g];
        double mean = 0.0;
        for (double c : codes) mean += c;
        mean /= static_cast<double>(codes.size());
        double var = 0.0;
        for (double c : codes) var += (c - mean) * (c - mean);
        const double stdev =
            codes.size() > 1 ? std::sqrt(var / static_cast<double>(codes.size() - 1)) : 0.0;
        points.push_back({temps[g], mean, static_cast<int>(codes.size()), stdev});
    }
    return points;
}

inline void save_model(const std::string& path, const RegressionModel& m) {
    csv::Table t;
    t.header = {"degree", "code_center", "code_scale"};
    for (int i = 0; i <= m.degree; ++i) t.header.push_back("c" + std::to_string(i));
    t.header.push_back("rmse");
    std::vector<std::string> row = {std::to_string(m.degree), detail::num_roundtrip(m.code_center),
                                    detail::num_roundtrip(m.code_scale)};
    for (const double c : m.coefficients) row.push_back(detail::num_roundtrip(c));
    row.push_back(detail::num_roundtrip(m.rmse));
    t.rows.push_back(row);
    csv::write_file(path, t);
}

inline RegressionModel load_model(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.rows.size() != 1) throw std::runtime_error(path + ": expected a single model row");
    const auto& row = t.rows[0];
    if (row.size() < 5) throw std::runtime_error(path + ": malformed model row");
    RegressionModel m;
    m.degree = static_cast<int>(csv::parse_num(row[0], path));
    if (m.degree < 1 || row.size() != static_cast<std::size_t>(m.degree) + 5)
        throw std::runtime_error(path + ": coefficient count does not match degree");
    m.code_center = csv::parse_num(row[1], path);
    m.code_scale = csv::parse_num(row[2], path);
    for (int i = 0; i <= m.degree; ++i)
        m.coefficients.push_back(csv::parse_num(row[3 + i], path));
    m.rmse = csv::parse_num(row.back(), path);
    m.code_min = m.code_center - m.code_scale;
    m.code_max = m.code_center + m.code_scale;
    return m;
}

}  // namespace acmet::calib
