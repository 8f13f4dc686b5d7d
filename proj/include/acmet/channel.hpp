#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acmet/csv.hpp"
#include "acmet/detail/format.hpp"
#include "acmet/detail/random.hpp"

namespace acmet::channel {

/// Dual-reflector pulse time-of-flight measuring base. The near reflector is
/// translucent: it returns part of the pulse and passes the rest to the far
/// reflector, so the speed estimate uses the echo-pair difference over
/// base_length() and both the electronic delay and the shared path cancel.
struct ChannelGeometry {
    double reflector_1_offset_m = 0.010;    // L1, transducer to translucent reflector
    double reflector_2_offset_m = 0.035;    // L2, transducer to far reflector
    double reflection_coeff_full = 0.93;    // R
    double reflection_coeff_partial = 0.5;  // R_p in (0,1)
    double carrier_freq_hz = 2.4e6;
    double timer_resolution_s = 1e-11;      // 1/100 ns counter tick
    double electronic_delay_s = 0.0;        // tau_e

    double base_length_m() const { return reflector_2_offset_m - reflector_1_offset_m; }

    void validate() const {
        if (!(reflector_1_offset_m > 0.0) || !(reflector_2_offset_m > reflector_1_offset_m))
            throw std::invalid_argument("channel geometry: need 0 < L1 < L2");
        if (!(reflection_coeff_full > 0.0) || reflection_coeff_full > 1.0)
            throw std::invalid_argument("channel geometry: R must be in (0, 1]");
        if (!(reflection_coeff_partial > 0.0) || !(reflection_coeff_partial < 1.0))
            throw std::invalid_argument("channel geometry: translucent R_p must be in (0, 1)");
        if (!(carrier_freq_hz > 0.0))
            throw std::invalid_argument("channel geometry: carrier frequency must be positive");
        if (!(timer_resolution_s > 0.0))
            throw std::invalid_argument("channel geometry: timer resolution must be positive");
        if (electronic_delay_s < 0.0)
            throw std::invalid_argument("channel geometry: electronic delay must be >= 0");
    }
};

/// Emitted pulse: Gaussian-windowed carrier. Default width keeps the pulse
/// under 1 us (FWHM ~0.59 us).
struct Pulse {
    double carrier_freq_hz = 2.4e6;
    double envelope_sigma_s = 0.25e-6;
};

inline Pulse default_pulse(const ChannelGeometry& geom) {
    return Pulse{geom.carrier_freq_hz, 0.25e-6};
}

struct WaveformRecord {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;
    Pulse pulse;
    std::uint64_t rng_seed = 0;
};

/// Whole-tick counter reading, N = floor(dt / t_res).
struct TimingCode {
    std::int64_t count = 0;
};

inline std::array<double, 2> echo_delays(const ChannelGeometry& geom, double sound_speed_mps) {
    return {2.0 * geom.reflector_1_offset_m / sound_speed_mps + geom.electronic_delay_s,
            2.0 * geom.reflector_2_offset_m / sound_speed_mps + geom.electronic_delay_s};
}

/// Model echo amplitudes for unit emitted amplitude: the translucent
/// reflection and the attenuated full reflection behind it.
inline std::array<double, 2> echo_amplitudes(const ChannelGeometry& geom, double alpha_np_per_m) {
    const double a1 = geom.reflection_coeff_partial *
                      std::exp(-2.0 * alpha_np_per_m * geom.reflector_1_offset_m);
    const double a2 = (1.0 - geom.reflection_coeff_partial) * geom.reflection_coeff_full *
                      std::exp(-2.0 * alpha_np_per_m * geom.reflector_2_offset_m);
    return {a1, a2};
}

/// Synthesize the two-echo record at speed c with plane-wave attenuation
/// alpha (Np/m) and additive white Gaussian noise. Deterministic per seed.
/// sample_rate_hz = 0 picks the default 10x carrier.
inline WaveformRecord synthesize_echoes(const ChannelGeometry& geom, double sound_speed_mps,
                                        double alpha_np_per_m, const Pulse& pulse,
                                        double noise_std, std::uint64_t seed,
                                        double sample_rate_hz = 0.0) {
    geom.validate();
    if (sound_speed_mps < 1000.0 || sound_speed_mps > 2000.0)
        throw std::invalid_argument("synthesize_echoes: speed outside [1000, 2000] m/s");
    if (alpha_np_per_m < 0.0) throw std::invalid_argument("synthesize_echoes: negative attenuation");
    if (noise_std < 0.0) throw std::invalid_argument("synthesize_echoes: negative noise level");
    if (!(pulse.carrier_freq_hz > 0.0) || !(pulse.envelope_sigma_s > 0.0))
        throw std::invalid_argument("synthesize_echoes: bad pulse descriptor");

    WaveformRecord rec;
    rec.sample_rate_hz = sample_rate_hz > 0.0 ? sample_rate_hz : 10.0 * pulse.carrier_freq_hz;
    if (rec.sample_rate_hz < 4.0 * pulse.carrier_freq_hz)
        throw std::invalid_argument("synthesize_echoes: sample rate below 4x carrier");
    rec.pulse = pulse;
    rec.rng_seed = seed;

    const auto delays = echo_delays(geom, sound_speed_mps);
    const auto amps = echo_amplitudes(geom, alpha_np_per_m);
    const double sigma = pulse.envelope_sigma_s;
    const double duration = delays[1] + 8.0 * sigma;
    const auto n = static_cast<std::size_t>(std::ceil(duration * rec.sample_rate_hz)) + 1;
    rec.samples.assign(n, 0.0);

    const double two_pi_f = 2.0 * 3.14159265358979323846 * pulse.carrier_freq_hz;
    for (int k = 0; k < 2; ++k) {
        const auto lo = static_cast<std::size_t>(
            std::max(0.0, std::floor((delays[k] - 6.0 * sigma) * rec.sample_rate_hz)));
        const auto hi = std::min<std::size_t>(
            n, static_cast<std::size_t>(std::ceil((delays[k] + 6.0 * sigma) * rec.sample_rate_hz)));
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = static_cast<double>(i) / rec.sample_rate_hz - delays[k];
            rec.samples[i] += amps[k] * std::exp(-u * u / (2.0 * sigma * sigma)) *
                              std::cos(two_pi_f * u);
        }
    }
    if (noise_std > 0.0) {
        detail::GaussianRng rng(seed);
        for (auto& s : rec.samples) s += noise_std * rng.gaussian();
    }
    return rec;
}

// Rectified sliding-max envelope over one carrier period.
inline std::vector<double> envelope(const WaveformRecord& rec) {
    const auto n = rec.samples.size();
    const auto half = static_cast<std::size_t>(
        std::max(1.0, std::round(rec.sample_rate_hz / rec.pulse.carrier_freq_hz / 2.0)));
    std::vector<double> env(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i > half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        double m = 0.0;
        for (std::size_t j = lo; j < hi; ++j) m = std::max(m, std::abs(rec.samples[j]));
        env[i] = m;
    }
    return env;
}

/// First-crossing arrival times of the envelope above threshold * max, one
/// per detected echo, ascending. Empty result means nothing crossed.
inline std::vector<double> detect_tof_threshold(const WaveformRecord& rec, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::invalid_argument("detect_tof_threshold: threshold must be in (0, 1)");
    const auto env = envelope(rec);
    double peak = 0.0;
    for (double e : env) peak = std::max(peak, e);
    std::vector<double> times;
    if (peak <= 0.0) return times;
    const double level = threshold * peak;
    bool above = false;
    for (std::size_t i = 0; i < env.size(); ++i) {
        if (!above && env[i] >= level) {
            times.push_back(static_cast<double>(i) / rec.sample_rate_hz);
            above = true;
        } else if (above && env[i] < level) {
            above = false;
        }
    }
    return times;
}

/// Half-open sample index range [begin, end).
struct SampleRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Cross-correlation delay between the echoes held in two non-overlapping
/// segments, with three-point parabolic sub-sample refinement. Returns the
/// signed arrival-time difference (segment 2 relative to segment 1).
inline double correlate_delay(const WaveformRecord& rec, SampleRange seg1, SampleRange seg2) {
    const auto n = rec.samples.size();
    if (seg1.begin >= seg1.end || seg2.begin >= seg2.end || seg1.end > n || seg2.end > n)
        throw std::invalid_argument("correlate_delay: bad segment bounds");
    if (seg1.begin < seg2.end && seg2.begin < seg1.end)
        throw std::invalid_argument("correlate_delay: segments overlap");

    const auto flat = [&](SampleRange s) {
        const double first = rec.samples[s.begin];
        for (std::size_t i = s.begin + 1; i < s.end; ++i)
            if (rec.samples[i] != first) return false;
        return true;
    };
    if (flat(seg1) || flat(seg2))
        throw std::runtime_error("correlate_delay: degenerate correlation (flat segment)");

    const double* x1 = rec.samples.data() + seg1.begin;
    const double* x2 = rec.samples.data() + seg2.begin;
    const auto n1 = static_cast<std::ptrdiff_t>(seg1.size());
    const auto n2 = static_cast<std::ptrdiff_t>(seg2.size());

    std::vector<double> corr(static_cast<std::size_t>(n1 + n2 - 1), 0.0);
    std::ptrdiff_t best = 0;
    double best_val = -1e300;
    for (std::ptrdiff_t m = -(n1 - 1); m <= n2 - 1; ++m) {
        double s = 0.0;
        const std::ptrdiff_t i_lo = std::max<std::ptrdiff_t>(0, -m);
        const std::ptrdiff_t i_hi = std::min(n1, n2 - m);
        for (std::ptrdiff_t i = i_lo; i < i_hi; ++i) s += x1[i] * x2[i + m];
        corr[static_cast<std::size_t>(m + n1 - 1)] = s;
        if (s > best_val) {
            best_val = s;
            best = m;
        }
    }

    double frac = 0.0;
    const std::size_t b = static_cast<std::size_t>(best + n1 - 1);
    if (b > 0 && b + 1 < corr.size()) {
        const double cm = corr[b - 1], c0 = corr[b], cp = corr[b + 1];
        const double denom = cm - 2.0 * c0 + cp;
        if (std::abs(denom) > 1e-300) frac = 0.5 * (cm - cp) / denom;
        frac = std::clamp(frac, -0.5, 0.5);
    }
    const double lag = static_cast<double>(best) + frac +
                       (static_cast<double>(seg2.begin) - static_cast<double>(seg1.begin));
    return lag / rec.sample_rate_hz;
}

/// Detect the echo pair and measure their differential delay by correlation.
inline double measure_echo_pair_delay(const WaveformRecord& rec, double threshold = 0.25) {
    const auto times = detect_tof_threshold(rec, threshold);
    if (times.size() < 2)
        throw std::runtime_error("measure_echo_pair_delay: expected two echoes, found " +
                                 std::to_string(times.size()));
    const double sigma = rec.pulse.envelope_sigma_s;
    const auto clamp_idx = [&](double t) {
        const double i = t * rec.sample_rate_hz;
        return static_cast<std::size_t>(std::clamp(i, 0.0, static_cast<double>(rec.samples.size())));
    };
    const auto seg = [&](double t_cross) {
        return SampleRange{clamp_idx(t_cross - 4.0 * sigma), clamp_idx(t_cross + 7.0 * sigma)};
    };
    return correlate_delay(rec, seg(times[0]), seg(times[1]));
}

inline TimingCode code_from_time(double dt_s, const ChannelGeometry& geom) {
    if (dt_s < 0.0) throw std::invalid_argument("code_from_time: negative interval");
    const double q = dt_s / geom.timer_resolution_s;
    const double r = std::round(q);
    // whole-tick counter; snap guards the floor against division round-off
    const double n = std::abs(q - r) < 1e-6 ? r : std::floor(q);
    return TimingCode{static_cast<std::int64_t>(n)};
}

inline double speed_from_code(TimingCode code, const ChannelGeometry& geom) {
    if (code.count <= 0) throw std::domain_error("speed_from_code: code must be positive");
    return 2.0 * geom.base_length_m() /
           (static_cast<double>(code.count) * geom.timer_resolution_s);
}

/// Speed step per counter tick at operating speed c: dc = c^2 t_res / (2 dL).
inline double velocity_quantization(const ChannelGeometry& geom, double sound_speed_mps) {
    if (!(sound_speed_mps > 0.0))
        throw std::invalid_argument("velocity_quantization: speed must be positive");
    return sound_speed_mps * sound_speed_mps * geom.timer_resolution_s /
           (2.0 * geom.base_length_m());
}

/// Pulse-cyclic (sing-around) speed: c = 2L / (1/f - tau_e).
inline double singaround_speed(double loop_freq_hz, double path_m, double electronic_delay_s) {
    if (!(loop_freq_hz > 0.0)) throw std::invalid_argument("singaround_speed: bad loop frequency");
    if (!(path_m > 0.0)) throw std::invalid_argument("singaround_speed: bad path length");
    const double period = 1.0 / loop_freq_hz;
    if (period <= electronic_delay_s)
        throw std::invalid_argument("singaround_speed: loop period does not exceed electronic delay");
    return 2.0 * path_m / (period - electronic_delay_s);
}

// Waveform fixture: "# sample_rate=<Hz> f0=<Hz> seed=<int>" then index,amplitude rows.
inline void save_waveform(const std::string& path, const WaveformRecord& rec) {
    csv::Table t;
    char sidecar[160];
    std::snprintf(sidecar, sizeof(sidecar), "# sample_rate=%.15g f0=%.15g seed=%llu",
                  rec.sample_rate_hz, rec.pulse.carrier_freq_hz,
                  static_cast<unsigned long long>(rec.rng_seed));
    t.comments.push_back(sidecar);
    t.header = {"index", "amplitude"};
    char amp[40];
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        std::snprintf(amp, sizeof(amp), "%.17g", rec.samples[i]);
        t.rows.push_back({std::to_string(i), amp});
    }
    csv::write_file(path, t);
}

inline WaveformRecord load_waveform(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    WaveformRecord rec;
    bool have_sidecar = false;
    for (const auto& c : t.comments) {
        double fs = 0.0, f0 = 0.0;
        unsigned long long seed = 0;
        if (std::sscanf(c.c_str(), "# sample_rate=%lg f0=%lg seed=%llu", &fs, &f0, &seed) == 3) {
            rec.sample_rate_hz = fs;
            rec.pulse.carrier_freq_hz = f0;
            rec.rng_seed = seed;
            have_sidecar = true;
        }
    }
    if (!have_sidecar) throw std::runtime_error(path + ": missing waveform sidecar header");
    if (t.header != std::vector<std::string>{"index", "amplitude"})
        throw std::runtime_error(path + ": expected header index,amplitude");
    rec.samples.resize(t.rows.size(), 0.0);
    for (const auto& row : t.rows) {
        if (row.size() != 2) throw std::runtime_error(path + ": malformed row");
        const auto idx = static_cast<std::size_t>(csv::parse_num(row[0], path));
        if (idx >= rec.samples.size()) throw std::runtime_error(path + ": index out of order");
        rec.samples[idx] = csv::parse_num(row[1], path);
    }
    return rec;
}

}  // namespace acmet::channel
