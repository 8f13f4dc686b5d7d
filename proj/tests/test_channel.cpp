#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "acmet/channel.hpp"

using namespace acmet::channel;

namespace {

ChannelGeometry test_geometry() {
    ChannelGeometry g;
    g.reflector_1_offset_m = 0.010;
    g.reflector_2_offset_m = 0.035;
    return g;
}

// peak time of |samples| restricted to [t_lo, t_hi)
double peak_time(const WaveformRecord& rec, double t_lo, double t_hi) {
    std::size_t best = 0;
    double best_val = -1.0;
    const auto lo = static_cast<std::size_t>(std::max(0.0, t_lo * rec.sample_rate_hz));
    const auto hi = std::min(rec.samples.size(),
                             static_cast<std::size_t>(t_hi * rec.sample_rate_hz));
    for (std::size_t i = lo; i < hi; ++i) {
        if (std::abs(rec.samples[i]) > best_val) {
            best_val = std::abs(rec.samples[i]);
            best = i;
        }
    }
    return static_cast<double>(best) / rec.sample_rate_hz;
}

}  // namespace

TEST_CASE("synthesized echoes sit at the round-trip delays") {
    const auto geom = test_geometry();
    const auto rec = synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.0, 1);
    const double carrier_period = 1.0 / geom.carrier_freq_hz;
    // 2*L/c: 13.333 us and 46.667 us
    CHECK(peak_time(rec, 0.0, 30e-6) == Catch::Approx(13.3333e-6).margin(carrier_period));
    CHECK(peak_time(rec, 30e-6, 60e-6) == Catch::Approx(46.6667e-6).margin(carrier_period));
}

TEST_CASE("echo amplitude ratio is (1-Rp)*R/Rp") {
    auto geom = test_geometry();
    geom.reflection_coeff_partial = 0.5;
    geom.reflection_coeff_full = 0.93;
    const auto amps = echo_amplitudes(geom, 0.0);
    CHECK(amps[1] / amps[0] == Catch::Approx(0.93).epsilon(1e-12));

    const auto rec = synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.0, 1);
    std::size_t mid = rec.samples.size() / 2;
    double p1 = 0.0, p2 = 0.0;
    for (std::size_t i = 0; i < mid; ++i) p1 = std::max(p1, std::abs(rec.samples[i]));
    for (std::size_t i = mid; i < rec.samples.size(); ++i)
        p2 = std::max(p2, std::abs(rec.samples[i]));
    CHECK(p2 / p1 == Catch::Approx(0.93).epsilon(0.02));
}

TEST_CASE("same seed gives identical samples") {
    const auto geom = test_geometry();
    const auto a = synthesize_echoes(geom, 1480.0, 0.5, default_pulse(geom), 0.01, 42);
    const auto b = synthesize_echoes(geom, 1480.0, 0.5, default_pulse(geom), 0.01, 42);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) REQUIRE(a.samples[i] == b.samples[i]);

    const auto c = synthesize_echoes(geom, 1480.0, 0.5, default_pulse(geom), 0.01, 43);
    bool all_equal = true;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        all_equal = all_equal && a.samples[i] == c.samples[i];
    CHECK_FALSE(all_equal);
}

TEST_CASE("synthesis rejects bad inputs") {
    const auto geom = test_geometry();
    CHECK_THROWS_AS(synthesize_echoes(geom, 900.0, 0.0, default_pulse(geom), 0.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(synthesize_echoes(geom, 1500.0, -1.0, default_pulse(geom), 0.0, 1),
                    std::invalid_argument);
    // sample rate below 4x carrier
    CHECK_THROWS_AS(synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.0, 1, 3.0 * 2.4e6),
                    std::invalid_argument);
    ChannelGeometry bad = geom;
    bad.reflector_2_offset_m = bad.reflector_1_offset_m;
    CHECK_THROWS_AS(synthesize_echoes(bad, 1500.0, 0.0, default_pulse(geom), 0.0, 1),
                    std::invalid_argument);
}

TEST_CASE("threshold detection finds both arrivals on a clean record") {
    const auto geom = test_geometry();
    const auto rec = synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.0, 1);
    const auto times = detect_tof_threshold(rec, 0.5);
    REQUIRE(times.size() == 2);
    const double carrier_period = 1.0 / geom.carrier_freq_hz;
    CHECK(times[0] == Catch::Approx(2.0 * 0.010 / 1500.0).margin(carrier_period));
    CHECK(times[1] == Catch::Approx(2.0 * 0.035 / 1500.0).margin(carrier_period));
}

TEST_CASE("threshold detection edge cases") {
    WaveformRecord zero;
    zero.sample_rate_hz = 24e6;
    zero.pulse = Pulse{};
    zero.samples.assign(2000, 0.0);
    CHECK(detect_tof_threshold(zero, 0.5).empty());

    CHECK_THROWS_AS(detect_tof_threshold(zero, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(detect_tof_threshold(zero, 0.0), std::invalid_argument);
}

TEST_CASE("correlation recovers a known shift exactly") {
    // two identical bursts k samples apart
    WaveformRecord rec;
    rec.sample_rate_hz = 24e6;
    rec.pulse = Pulse{};
    rec.samples.assign(1200, 0.0);
    const std::size_t k = 300;
    for (std::size_t i = 0; i < 100; ++i) {
        const double v = std::sin(0.37 * static_cast<double>(i)) *
                         std::exp(-0.001 * (static_cast<double>(i) - 50.0) *
                                  (static_cast<double>(i) - 50.0));
        rec.samples[150 + i] = v;
        rec.samples[150 + k + i] = v;
    }
    const SampleRange seg1{120, 300};
    const SampleRange seg2{120 + k, 300 + k};
    const double dt = correlate_delay(rec, seg1, seg2);
    CHECK(dt == Catch::Approx(static_cast<double>(k) / rec.sample_rate_hz).epsilon(1e-12));
}

TEST_CASE("correlation delay on noiseless echoes is sub-sample accurate") {
    const auto geom = test_geometry();
    const double sample_period = 1.0 / 24e6;
    // sweep speeds so the true delay lands at many sub-sample offsets
    for (double c = 1400.0; c <= 1700.0; c += 13.7) {
        const auto rec = synthesize_echoes(geom, c, 0.0, default_pulse(geom), 0.0, 1);
        const double dt = measure_echo_pair_delay(rec, 0.25);
        const double truth = 2.0 * geom.base_length_m() / c;
        REQUIRE(std::abs(dt - truth) < 0.1 * sample_period);
    }
}

TEST_CASE("correlation under 40 dB SNR stays within 1e4 timer ticks") {
    const auto geom = test_geometry();
    const double truth = 2.0 * geom.base_length_m() / 1500.0;
    const double bound = geom.timer_resolution_s * 1e4;  // 100 ns
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        // echo-1 amplitude is 0.5; 40 dB SNR -> noise sigma 0.005
        const auto rec = synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.005, seed);
        const double dt = measure_echo_pair_delay(rec, 0.25);
        REQUIRE(std::abs(dt - truth) < bound);
    }
}

TEST_CASE("threshold and correlation estimates agree on clean records") {
    const auto geom = test_geometry();
    const double carrier_period = 1.0 / geom.carrier_freq_hz;
    for (double c : {1420.0, 1480.0, 1550.0, 1650.0}) {
        const auto rec = synthesize_echoes(geom, c, 0.0, default_pulse(geom), 0.0, 1);
        const auto times = detect_tof_threshold(rec, 0.25);
        REQUIRE(times.size() == 2);
        const double dt_threshold = times[1] - times[0];
        const double dt_corr = measure_echo_pair_delay(rec, 0.25);
        REQUIRE(std::abs(dt_threshold - dt_corr) < carrier_period);
    }
}

TEST_CASE("correlation error handling") {
    WaveformRecord rec;
    rec.sample_rate_hz = 24e6;
    rec.pulse = Pulse{};
    rec.samples.assign(400, 0.0);
    rec.samples[50] = 1.0;
    rec.samples[250] = 1.0;
    CHECK_THROWS_WITH(correlate_delay(rec, {100, 200}, {150, 300}),
                      Catch::Matchers::ContainsSubstring("overlap"));
    // flat segments have no correlation structure
    CHECK_THROWS_WITH(correlate_delay(rec, {100, 200}, {300, 400}),
                      Catch::Matchers::ContainsSubstring("flat"));
}

TEST_CASE("counter codes floor the interval") {
    const auto geom = test_geometry();
    CHECK(code_from_time(4.0e-5, geom).count == 4000000);
    CHECK(code_from_time(2.0 * 0.025 / 1500.0, geom).count == 3333333);
    CHECK(code_from_time(0.0, geom).count == 0);
    CHECK_THROWS_AS(code_from_time(-1e-9, geom), std::invalid_argument);
}

TEST_CASE("speed from code inverts the base length") {
    const auto geom = test_geometry();  // base 0.025 m
    CHECK(speed_from_code({4000000}, geom) == Catch::Approx(1250.0).epsilon(1e-12));
    CHECK(speed_from_code({3333333}, geom) == Catch::Approx(1500.00015).epsilon(1e-9));
    CHECK_THROWS_AS(speed_from_code({0}, geom), std::domain_error);
}

TEST_CASE("velocity quantization formula") {
    auto geom = test_geometry();
    CHECK(velocity_quantization(geom, 1500.0) == Catch::Approx(4.5e-4).epsilon(1e-12));
    geom.reflector_2_offset_m = geom.reflector_1_offset_m + 0.100;
    CHECK(velocity_quantization(geom, 1500.0) == Catch::Approx(1.125e-4).epsilon(1e-12));
    geom.reflector_2_offset_m = geom.reflector_1_offset_m + 0.050;
    CHECK(velocity_quantization(geom, 1500.0) == Catch::Approx(2.25e-4).epsilon(1e-12));
}

TEST_CASE("quantization round trip stays within one step") {
    const auto geom = test_geometry();
    for (int i = 0; i < 1000; ++i) {
        const double c = 1400.0 + 300.0 * static_cast<double>(i) / 999.0;
        const double dt = 2.0 * geom.base_length_m() / c;
        const auto code = code_from_time(dt, geom);
        const double c2 = speed_from_code(code, geom);
        REQUIRE(std::abs(c2 - c) <=
                velocity_quantization(geom, std::max(c, c2)) * (1.0 + 1e-9));
    }
}

TEST_CASE("differential code is independent of the electronic delay") {
    std::int64_t reference_code = 0;
    int idx = 0;
    for (const double tau_e : {0.0, 1e-6, 10e-6}) {
        auto geom = test_geometry();
        geom.electronic_delay_s = tau_e;
        const auto rec = synthesize_echoes(geom, 1497.3, 0.0, default_pulse(geom), 0.0, 5);
        const double dt = measure_echo_pair_delay(rec, 0.25);
        const auto code = code_from_time(dt, geom);
        if (idx++ == 0)
            reference_code = code.count;
        else
            REQUIRE(code.count == reference_code);
    }
}

TEST_CASE("sing-around speed") {
    CHECK(singaround_speed(15000.0, 0.05, 0.0) == Catch::Approx(1500.0).epsilon(1e-12));
    CHECK(singaround_speed(14778.325, 0.05, 1e-6) == Catch::Approx(1500.0).margin(1e-3));
    CHECK_THROWS_AS(singaround_speed(1e6, 0.05, 1e-6), std::invalid_argument);  // tau_e = 1/f
    CHECK_THROWS_AS(singaround_speed(0.0, 0.05, 0.0), std::invalid_argument);
}

TEST_CASE("waveform fixture round trip") {
    const auto geom = test_geometry();
    const auto rec = synthesize_echoes(geom, 1500.0, 0.0, default_pulse(geom), 0.002, 9);
    const auto path = std::filesystem::temp_directory_path() / "acmet_waveform.csv";
    save_waveform(path.string(), rec);
    const auto loaded = load_waveform(path.string());
    CHECK(loaded.sample_rate_hz == rec.sample_rate_hz);
    CHECK(loaded.pulse.carrier_freq_hz == rec.pulse.carrier_freq_hz);
    CHECK(loaded.rng_seed == rec.rng_seed);
    REQUIRE(loaded.samples.size() == rec.samples.size());
    for (std::size_t i = 0; i < rec.samples.size(); ++i)
        REQUIRE(loaded.samples[i] == rec.samples[i]);
    std::filesystem::remove(path);
}
