#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "icscreen/analysis.hpp"
#include "icscreen/dataio.hpp"
#include "icscreen/model.hpp"
#include "test_support.hpp"

using namespace icscreen;
using testsupport::close_abs;
using testsupport::make_sine_wave;
using testsupport::make_triangle_wave;

namespace {

constexpr double kPi = 3.14159265358979323846;

OpAmpModel reference_model(double gbwp_hz) {
    OpAmpModel m;
    m.gbwp_hz = gbwp_hz;
    m.sr_v_per_s = 13e6;
    m.vom_pos_v = 13.5;
    m.vom_neg_v = -13.5;
    return m;
}

/// Curve sampled straight from the closed-loop formula.
BodeCurve formula_curve(const OpAmpModel& m, const AmpConfig& cfg, double fmin, double fmax,
                        int points_per_decade) {
    BodeCurve curve;
    for (double f = fmin; f <= fmax * (1.0 + 1e-9);
         f *= std::pow(10.0, 1.0 / points_per_decade)) {
        const auto resp = closed_loop_gain(m, cfg, f);
        curve.points.push_back(BodePoint{f, resp.gain_db, resp.phase_deg});
    }
    return curve;
}

/// Square capture sized so the slew transitions span ~41 samples and the
/// plateaus dominate: period = 100x the rail-to-rail transit time.
SynthCapture square_capture_for_slew(double sr_v_per_s) {
    OpAmpModel m = reference_model(5.2e6);
    m.sr_v_per_s = sr_v_per_s;
    AmpConfig cfg;
    cfg.topology = Topology::noninverting;
    cfg.gain_magnitude = 3000.0;  // drives the output hard into both rails
    const double transit_s = (m.vom_pos_v - m.vom_neg_v) / sr_v_per_s;
    const double f = 1.0 / (100.0 * transit_s);
    return synth_capture(m, cfg, Stimulus{StimulusKind::square, f, 4.0}, 2, 4096, 0.0, 1);
}

} // namespace

TEST_SUITE("analysis") {

TEST_CASE("sine fit recovers an exact basis member to machine precision") {
    const Waveform wave = make_sine_wave(1000.0, 2.0, 0.3, 0.0, 64, 4);
    const SinFit fit = fit_sine(wave, 1000.0);
    CHECK(close_abs(fit.amplitude_v, 2.0, 1e-9));
    CHECK(close_abs(fit.phase_rad, 0.3, 1e-9));
    CHECK(close_abs(fit.offset_v, 0.0, 1e-9));
    CHECK(fit.residual_rms_v < 1e-9);
}

TEST_CASE("sine fit tolerates additive noise") {
    const Waveform clean = make_sine_wave(1000.0, 2.0, 0.3, 0.0, 64, 4);
    Waveform noisy = clean;
    std::mt19937_64 rng(2024);
    for (double& v : noisy.samples) v += testsupport::uniform_pm(rng, 0.005);

    const SinFit fit_clean = fit_sine(clean, 1000.0);
    const SinFit fit_noisy = fit_sine(noisy, 1000.0);
    CHECK(std::fabs(fit_noisy.amplitude_v - 2.0) < 0.005 * 2.0);
    CHECK(std::fabs(fit_noisy.amplitude_v - fit_clean.amplitude_v) < 0.005 * 2.0);
}

TEST_CASE("sine fit of a constant returns zero amplitude and the offset") {
    Waveform wave;
    wave.dt_s = 1.0 / (1000.0 * 64.0);
    wave.samples.assign(256, 5.0);
    const SinFit fit = fit_sine(wave, 1000.0);
    CHECK(close_abs(fit.amplitude_v, 0.0, 1e-9));
    CHECK(fit.offset_v == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("sine fit residual vanishes on anything inside its basis span") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const double f = 100.0 * std::pow(10.0, 3.0 * (rng() >> 11) * 0x1.0p-53);
        const double a = testsupport::uniform_pm(rng, 4.0);
        const double b = testsupport::uniform_pm(rng, 4.0);
        const double c = testsupport::uniform_pm(rng, 2.0);
        Waveform wave;
        wave.dt_s = 1.0 / (f * 48.0);
        wave.samples.resize(48 * 3);
        for (std::size_t i = 0; i < wave.samples.size(); ++i) {
            const double th = 2.0 * kPi * f * wave.time_at(i);
            wave.samples[i] = a * std::sin(th) + b * std::cos(th) + c;
        }
        const SinFit fit = fit_sine(wave, f);
        CHECK(fit.residual_rms_v < 1e-9 * (std::fabs(a) + std::fabs(b) + std::fabs(c) + 1.0));
    }
}

TEST_CASE("sine fit preconditions") {
    CHECK_THROWS_AS(fit_sine(make_sine_wave(1000.0, 1.0, 0.0, 0.0, 64, 4), 0.0),
                    std::invalid_argument);
    // 1.5 cycles only
    Waveform short_wave = make_sine_wave(1000.0, 1.0, 0.0, 0.0, 64, 3);
    short_wave.samples.resize(96);
    CHECK_THROWS_AS(fit_sine(short_wave, 1000.0), std::invalid_argument);
    // 8 samples per cycle
    Waveform sparse;
    sparse.dt_s = 1.0 / 8000.0;
    sparse.samples.assign(64, 0.0);
    CHECK_THROWS_AS(fit_sine(sparse, 1000.0), std::invalid_argument);
}

TEST_CASE("bode: identical input and output give 0 dB and 0 degrees") {
    std::vector<CapturePair> pairs;
    for (double f : {100.0, 1000.0, 10000.0}) {
        const Waveform w = make_sine_wave(f, 0.5, 0.2, 0.0, 64, 4);
        pairs.push_back(CapturePair{f, w, w});
    }
    const BodeCurve curve = bode_from_pairs(pairs, "identity");
    for (const auto& p : curve.points) {
        CHECK(close_abs(p.gain_db, 0.0, 1e-9));
        CHECK(close_abs(p.phase_deg, 0.0, 1e-9));
    }
    CHECK(curve.input_vpp == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bode: a quarter-period delay reads as -90 degrees at 0 dB") {
    const double f = 2000.0;
    std::vector<CapturePair> pairs{CapturePair{
        f, make_sine_wave(f, 1.0, 0.0, 0.0, 64, 4), make_sine_wave(f, 1.0, -kPi / 2, 0.0, 64, 4)}};
    const BodeCurve curve = bode_from_pairs(pairs);
    CHECK(close_abs(curve.points[0].gain_db, 0.0, 1e-9));
    CHECK(close_abs(curve.points[0].phase_deg, -90.0, 1e-9));
}

TEST_CASE("bode from simulated captures matches the closed-loop formula") {
    const OpAmpModel m = reference_model(5.2e6);
    AmpConfig cfg;
    cfg.gain_magnitude = 20.0;

    // Small-signal stimulus: at 1 Vp-p this part would already slew-compress
    // around the corner, which is real behavior but not what this linearity
    // check is after.
    const double vpp = testsupport::linear_sweep_vpp(m, cfg);
    std::vector<CapturePair> pairs;
    for (double f = 10.0; f <= 6e6 * (1.0 + 1e-9); f *= std::pow(10.0, 1.0 / 20.0)) {
        auto cap = synth_capture(m, cfg, Stimulus{StimulusKind::sine, f, vpp}, 2, 64, 0.0, 1);
        pairs.push_back(CapturePair{f, std::move(cap.input), std::move(cap.output)});
    }
    const BodeCurve curve = bode_from_pairs(pairs);
    for (const auto& p : curve.points) {
        const auto expected = closed_loop_gain(m, cfg, p.f_hz);
        CHECK(close_abs(p.gain_db, expected.gain_db, 0.05));
        CHECK(close_abs(wrap_degrees(p.phase_deg - expected.phase_deg), 0.0, 0.5));
    }
}

TEST_CASE("bode rejects duplicate frequencies and dead inputs") {
    const Waveform w = make_sine_wave(500.0, 1.0, 0.0, 0.0, 64, 4);
    std::vector<CapturePair> dup{CapturePair{500.0, w, w}, CapturePair{500.0, w, w}};
    CHECK_THROWS_WITH_AS(bode_from_pairs(dup), doctest::Contains("500"), std::invalid_argument);

    Waveform dead;
    dead.dt_s = w.dt_s;
    dead.samples.assign(w.samples.size(), 3.0);
    std::vector<CapturePair> bad{CapturePair{500.0, dead, w}};
    CHECK_THROWS_WITH_AS(bode_from_pairs(bad), doctest::Contains("500"), std::invalid_argument);
}

TEST_CASE("bode gain and phase negate when input and output swap") {
    std::mt19937_64 rng(4242);
    std::vector<CapturePair> fwd;
    std::vector<CapturePair> rev;
    for (double f : {300.0, 3000.0, 30000.0}) {
        const double gain = 0.2 + 5.0 * (rng() >> 11) * 0x1.0p-53;
        const double phase = testsupport::uniform_pm(rng, 2.5);
        const Waveform in = make_sine_wave(f, 1.0, 0.0, 0.0, 64, 4);
        const Waveform out = make_sine_wave(f, gain, phase, 0.0, 64, 4);
        fwd.push_back(CapturePair{f, in, out});
        rev.push_back(CapturePair{f, out, in});
    }
    const BodeCurve c_fwd = bode_from_pairs(fwd);
    const BodeCurve c_rev = bode_from_pairs(rev);
    for (std::size_t i = 0; i < c_fwd.points.size(); ++i) {
        CHECK(close_abs(c_rev.points[i].gain_db, -c_fwd.points[i].gain_db, 1e-9));
        CHECK(close_abs(wrap_degrees(c_rev.points[i].phase_deg + c_fwd.points[i].phase_deg), 0.0,
                        1e-9));
    }
}

TEST_CASE("f3dB extraction on single-pole curves") {
    AmpConfig cfg;
    cfg.gain_magnitude = 20.0;

    const BodeCurve healthy = formula_curve(reference_model(5.2e6), cfg, 10.0, 6e6, 20);
    const auto est = extract_f3db(healthy);
    CHECK(est.crossing_monotonic);
    CHECK(est.f3db_hz == doctest::Approx(5.2e6 / 21.0).epsilon(0.02));

    // A part whose closed-loop corner sits at 22 kHz.
    const BodeCurve slow = formula_curve(reference_model(22e3 * 21.0), cfg, 10.0, 6e6, 20);
    CHECK(extract_f3db(slow).f3db_hz == doctest::Approx(22e3).epsilon(0.05));
}

TEST_CASE("f3dB interpolation lands on the geometric mean of a symmetric bracket") {
    const double level = -3.0102999566398120;
    BodeCurve curve;
    curve.points = {
        BodePoint{10.0, 0.0, 0.0},
        BodePoint{20.0, 0.0, 0.0},
        BodePoint{1000.0, level + 1.5, 0.0},
        BodePoint{2000.0, level - 1.5, 0.0},
        BodePoint{20000.0, -20.0, 0.0},
    };
    const auto est = extract_f3db(curve);
    CHECK(est.f3db_hz == doctest::Approx(std::sqrt(2.0) * 1000.0).epsilon(1e-9));
    CHECK(est.crossing_monotonic);
}

TEST_CASE("f3dB extraction rejects curves without a bracketed crossing") {
    BodeCurve flat;
    for (double f = 10.0; f <= 1000.0; f *= 2.0) flat.points.push_back(BodePoint{f, 26.0, 0.0});
    CHECK_THROWS_AS(extract_f3db(flat), std::invalid_argument);
}

TEST_CASE("f3dB extraction flags a non-monotonic crossing region") {
    BodeCurve wobble;
    wobble.points = {
        BodePoint{10.0, 0.0, 0.0},   BodePoint{20.0, 0.0, 0.0},
        BodePoint{1000.0, -4.0, 0.0},  // first crossing
        BodePoint{2000.0, -1.0, 0.0},  // back above the level
        BodePoint{4000.0, -9.0, 0.0},
    };
    const auto est = extract_f3db(wobble);
    CHECK_FALSE(est.crossing_monotonic);
    CHECK(est.f3db_hz < 1000.0);  // first crossing sits between 20 and 1000 Hz
}

TEST_CASE("f3dB equals GBWP over noise gain across the design space") {
    for (double n_gain : {2.0, 11.0, 21.0}) {
        for (double gbwp : {1e5, 1e6, 1e7}) {
            AmpConfig cfg;
            cfg.topology = Topology::inverting;
            cfg.gain_magnitude = n_gain - 1.0;
            const OpAmpModel m = reference_model(gbwp);
            const double f3 = gbwp / n_gain;
            const BodeCurve curve = formula_curve(m, cfg, f3 / 100.0, 10.0 * f3, 20);
            CHECK(extract_f3db(curve).f3db_hz == doctest::Approx(f3).epsilon(0.02));
        }
    }
}

TEST_CASE("single-pole fit recovers the generator GBWP") {
    AmpConfig cfg;
    cfg.gain_magnitude = 20.0;
    const double n_gain = noise_gain(cfg);

    const BodeCurve healthy = formula_curve(reference_model(5.2e6), cfg, 10.0, 6e6, 20);
    const SinglePoleFit fit = fit_single_pole(healthy, n_gain);
    CHECK(fit.gbwp_hz == doctest::Approx(5.2e6).epsilon(0.02));
    CHECK(close_abs(fit.g_dc_db, 26.0206, 0.05));

    const BodeCurve slow = formula_curve(reference_model(320e3), cfg, 10.0, 6e6, 20);
    CHECK(fit_single_pole(slow, n_gain).gbwp_hz == doctest::Approx(320e3).epsilon(0.02));
}

TEST_CASE("single-pole fit rejects a flat curve") {
    BodeCurve flat;
    for (double f = 10.0; f <= 1000.0; f *= std::pow(10.0, 0.05))
        flat.points.push_back(BodePoint{f, 26.0, 0.0});
    CHECK_THROWS_WITH_AS(fit_single_pole(flat, 21.0), doctest::Contains("rolloff"),
                         std::invalid_argument);
}

TEST_CASE("slew rate of an ideal ramp between plateaus equals the ramp slope") {
    // 0 V plateau, a 0->1 V ramp over 1 ms, then a 1 V plateau.
    Waveform wave;
    wave.dt_s = 1e-5;
    const std::size_t plateau = 300, ramp = 100;
    wave.samples.assign(plateau, 0.0);
    for (std::size_t i = 1; i <= ramp; ++i)
        wave.samples.push_back(static_cast<double>(i) / ramp);
    wave.samples.insert(wave.samples.end(), plateau, 1.0);

    const SlewRateEstimate est = extract_slew_rate(wave);
    CHECK(est.rising_edges == 1);
    CHECK(est.falling_edges == 0);
    CHECK(est.rising_v_per_s == doctest::Approx(1000.0).epsilon(1e-6));
    CHECK(est.combined_v_per_s == doctest::Approx(1000.0).epsilon(1e-6));
}

TEST_CASE("slew extraction round-trips the simulator across four decades") {
    for (double sr_v_per_us : {0.01, 0.1, 1.0, 13.0}) {
        const double sr = sr_v_per_us * 1e6;
        const auto cap = square_capture_for_slew(sr);
        const SlewRateEstimate est = extract_slew_rate(cap.output);
        CHECK(est.rising_edges >= 1);
        CHECK(est.falling_edges >= 1);
        CHECK(est.combined_v_per_s == doctest::Approx(sr).epsilon(0.05));
        CHECK(est.rising_v_per_s == doctest::Approx(sr).epsilon(0.05));
        CHECK(est.falling_v_per_s == doctest::Approx(sr).epsilon(0.05));
    }
}

TEST_CASE("slew extraction rejects waveforms without plateaus") {
    Waveform ramp;
    ramp.dt_s = 1e-5;
    ramp.samples.resize(1000);
    for (std::size_t i = 0; i < ramp.samples.size(); ++i)
        ramp.samples[i] = static_cast<double>(i);
    CHECK_THROWS_AS(extract_slew_rate(ramp), std::invalid_argument);

    Waveform flat;
    flat.dt_s = 1e-5;
    flat.samples.assign(1000, 2.5);
    CHECK_THROWS_AS(extract_slew_rate(flat), std::invalid_argument);
}

TEST_CASE("distortion score: pure sine is spectrally clean") {
    const Waveform sine = make_sine_wave(1000.0, 3.0, 0.7, 0.0, 256, 4);
    CHECK(ramp_distortion_score(sine, 1000.0) < 1e-6);
}

TEST_CASE("distortion score of an ideal triangle matches the harmonic series") {
    // Scorer truncates at harmonic 10, so the oracle sums odd n = 3..9.
    const double expected = testsupport::triangle_thd_oracle(9);
    CHECK(expected == doctest::Approx(0.1204765).epsilon(1e-5));

    const Waveform tri = make_triangle_wave(1000.0, 2.0, 256, 4);
    CHECK(close_abs(ramp_distortion_score(tri, 1000.0), expected, 1e-3));
}

TEST_CASE("distortion score is invariant under scaling and time shift") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        const double f = 500.0;
        const double h3 = 0.05 + 0.2 * (rng() >> 11) * 0x1.0p-53;
        const double h5 = 0.02 + 0.1 * (rng() >> 11) * 0x1.0p-53;
        const double shift = testsupport::uniform_pm(rng, 1.0 / f);

        auto build = [&](double scale, double t_shift) {
            Waveform w;
            w.dt_s = 1.0 / (f * 128.0);
            w.samples.resize(128 * 4);
            for (std::size_t i = 0; i < w.samples.size(); ++i) {
                const double t = w.time_at(i) + t_shift;
                const double th = 2.0 * kPi * f * t;
                w.samples[i] = scale * (std::sin(th) + h3 * std::sin(3 * th + 0.4) +
                                        h5 * std::sin(5 * th - 1.1));
            }
            return w;
        };

        const double base = ramp_distortion_score(build(1.0, 0.0), f);
        const double scaled = ramp_distortion_score(build(3.7, 0.0), f);
        const double shifted = ramp_distortion_score(build(1.0, shift), f);
        CHECK(base == doctest::Approx(std::sqrt(h3 * h3 + h5 * h5)).epsilon(1e-6));
        CHECK(close_abs(scaled, base, 1e-9));
        CHECK(close_abs(shifted, base, 1e-9));
    }
}

TEST_CASE("distortion score preconditions") {
    Waveform flat;
    flat.dt_s = 1.0 / (1000.0 * 128.0);
    flat.samples.assign(512, 1.0);
    CHECK_THROWS_WITH_AS(ramp_distortion_score(flat, 1000.0), doctest::Contains("carrier"),
                         std::invalid_argument);

    // Too few samples per cycle.
    const Waveform sparse = make_sine_wave(1000.0, 1.0, 0.0, 0.0, 32, 4);
    CHECK_THROWS_AS(ramp_distortion_score(sparse, 1000.0), std::invalid_argument);

    // Not enough cycles.
    Waveform brief = make_sine_wave(1000.0, 1.0, 0.0, 0.0, 256, 2);
    brief.samples.resize(300);
    CHECK_THROWS_AS(ramp_distortion_score(brief, 1000.0), std::invalid_argument);
}

TEST_CASE("output swing from a simulated saturated square response") {
    OpAmpModel m = reference_model(5.2e6);
    AmpConfig cfg;
    cfg.topology = Topology::noninverting;
    cfg.gain_magnitude = 3000.0;
    const auto cap =
        synth_capture(m, cfg, Stimulus{StimulusKind::square, 10.0, 4.0}, 2, 8192, 0.0, 1);
    const OutputSwing swing = extract_vom(cap.output);
    CHECK(close_abs(swing.vom_pos_v, 13.5, 0.05));
    CHECK(close_abs(swing.vom_neg_v, -13.5, 0.05));
}

TEST_CASE("output swing of a hard-clipped sine reads the clip levels") {
    Waveform wave = make_sine_wave(100.0, 20.0, 0.0, 0.0, 512, 4);
    for (double& v : wave.samples) v = std::clamp(v, -12.0, 12.0);
    const OutputSwing swing = extract_vom(wave);
    CHECK(swing.vom_pos_v == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(swing.vom_neg_v == doctest::Approx(-12.0).epsilon(1e-12));
}

TEST_CASE("output swing rejects an unclipped sine") {
    const Waveform wave = make_sine_wave(100.0, 5.0, 0.0, 0.0, 512, 4);
    CHECK_THROWS_WITH_AS(extract_vom(wave), doctest::Contains("unclipped"),
                         std::invalid_argument);
}

} // TEST_SUITE
