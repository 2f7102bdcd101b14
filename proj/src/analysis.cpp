#include "icscreen/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "icscreen/kernels.hpp"

namespace icscreen {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPowerDb = 3.0102999566398120;  // 20*log10(sqrt(2))

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

/// Percentile with linear interpolation between order statistics, q in [0,1].
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median_inplace(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Mean gain of the lowest measured decade, used as the DC gain reference.
double dc_gain_db(const BodeCurve& curve) {
    const double f_hi = curve.points.front().f_hz * 10.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& p : curve.points) {
        if (p.f_hz > f_hi) break;
        sum += p.gain_db;
        ++count;
    }
    return sum / static_cast<double>(count);
}

/// Interpolated times where the wave crosses `level` in the given direction.
std::vector<double> level_crossings(const Waveform& wave, double level, bool rising) {
    std::vector<double> times;
    for (std::size_t i = 0; i + 1 < wave.samples.size(); ++i) {
        const double a = wave.samples[i];
        const double b = wave.samples[i + 1];
        const bool crosses = rising ? (a <= level && b > level) : (a >= level && b < level);
        if (!crosses) continue;
        const double frac = (level - a) / (b - a);
        times.push_back(wave.time_at(i) + frac * wave.dt_s);
    }
    return times;
}

/// Pairs each 90%-level crossing with the latest preceding 10%-level
/// crossing and returns the 10-90% secant slopes (rising polarity; for
/// falling edges the caller flips the levels).
std::vector<double> edge_slopes(const std::vector<double>& t_start,
                                const std::vector<double>& t_end, double dv) {
    std::vector<double> slopes;
    double previous_end = -std::numeric_limits<double>::infinity();
    for (double te : t_end) {
        const double* ts = nullptr;
        for (const double& t : t_start) {
            if (t < te && t > previous_end) ts = &t;
            if (t >= te) break;
        }
        if (ts == nullptr) continue;
        slopes.push_back(dv / (te - *ts));
        previous_end = te;
    }
    return slopes;
}

} // namespace

void validate(const BodeCurve& curve) {
    require(!curve.points.empty(), "Bode curve must contain points");
    double last_f = 0.0;
    for (const auto& p : curve.points) {
        require(std::isfinite(p.f_hz) && p.f_hz > 0.0, "Bode frequencies must be > 0");
        require(p.f_hz > last_f, "Bode frequencies must be strictly increasing");
        require(std::isfinite(p.gain_db) && std::isfinite(p.phase_deg),
                "Bode gain/phase must be finite");
        last_f = p.f_hz;
    }
}

SinFit fit_sine(const Waveform& wave, double f_hz) {
    validate(wave);
    require(std::isfinite(f_hz) && f_hz > 0.0, "fit frequency must be > 0");

    const std::size_t n = wave.samples.size();
    const double duration = wave.duration_s();
    require(duration * f_hz >= 2.0 * (1.0 - 1e-9),
            "waveform must span at least 2 full cycles of the fit frequency");
    require(f_hz * wave.dt_s <= 1.0 / 16.0 + 1e-12,
            "waveform must carry at least 16 samples per cycle");

    std::vector<double> s(n);
    std::vector<double> c(n);
    const double w = 2.0 * kPi * f_hz;
    kernels::fill_sine_cosine(s, c, w * wave.t0_s, w * wave.dt_s);

    const auto& v = wave.samples;
    const double nn = static_cast<double>(n);
    // Normal equations of the {sin, cos, 1} basis.
    double m[3][3] = {
        {kernels::dot(s, s), kernels::dot(s, c), kernels::reduce_sum(s)},
        {0.0, kernels::dot(c, c), kernels::reduce_sum(c)},
        {0.0, 0.0, nn},
    };
    m[1][0] = m[0][1];
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];
    double rhs[3] = {kernels::dot(v, s), kernels::dot(v, c), kernels::reduce_sum(v)};

    // Gaussian elimination with partial pivoting.
    int order[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[order[r]][col]) > std::fabs(m[order[pivot]][col])) pivot = r;
        std::swap(order[col], order[pivot]);
        const double diag = m[order[col]][col];
        require(std::fabs(diag) > nn * 1e-14, "sine fit basis is degenerate");
        for (int r = col + 1; r < 3; ++r) {
            const double factor = m[order[r]][col] / diag;
            for (int k = col; k < 3; ++k) m[order[r]][k] -= factor * m[order[col]][k];
            rhs[order[r]] -= factor * rhs[order[col]];
        }
    }
    double sol[3];
    for (int row = 2; row >= 0; --row) {
        double acc = rhs[order[row]];
        for (int k = row + 1; k < 3; ++k) acc -= m[order[row]][k] * sol[k];
        sol[row] = acc / m[order[row]][row];
    }
    const double a = sol[0];
    const double b = sol[1];
    const double offset = sol[2];

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = v[i] - (a * s[i] + b * c[i] + offset);
        ss_res += r * r;
    }

    SinFit fit;
    fit.amplitude_v = std::hypot(a, b);
    fit.phase_rad = (fit.amplitude_v > 0.0) ? std::atan2(b, a) : 0.0;
    fit.offset_v = offset;
    fit.freq_hz = f_hz;
    fit.residual_rms_v = std::sqrt(ss_res / nn);
    return fit;
}

BodeCurve bode_from_pairs(const std::vector<CapturePair>& captures, std::string description) {
    require(!captures.empty(), "no captures supplied");

    BodeCurve curve;
    curve.description = std::move(description);
    curve.points.reserve(captures.size());

    std::vector<double> input_amplitudes;
    for (const auto& cap : captures) {
        SinFit in;
        SinFit out;
        try {
            in = fit_sine(cap.input, cap.f_hz);
            out = fit_sine(cap.output, cap.f_hz);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("capture at " + std::to_string(cap.f_hz) +
                                        " Hz: " + e.what());
        }
        const double rms_in =
            std::sqrt(kernels::dot(cap.input.samples, cap.input.samples) /
                      static_cast<double>(cap.input.samples.size()));
        if (!(in.amplitude_v > 1e-9 * std::max(rms_in, 1e-300)))
            throw std::invalid_argument("capture at " + std::to_string(cap.f_hz) +
                                        " Hz: input has no component at the fit frequency");
        curve.points.push_back(BodePoint{
            cap.f_hz,
            20.0 * std::log10(out.amplitude_v / in.amplitude_v),
            wrap_degrees((out.phase_rad - in.phase_rad) * (180.0 / kPi)),
        });
        input_amplitudes.push_back(in.amplitude_v);
    }

    std::sort(curve.points.begin(), curve.points.end(),
              [](const BodePoint& a, const BodePoint& b) { return a.f_hz < b.f_hz; });
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (!(curve.points[i].f_hz > curve.points[i - 1].f_hz))
            throw std::invalid_argument("duplicate sweep frequency " +
                                        std::to_string(curve.points[i].f_hz) + " Hz");

    curve.input_vpp = 2.0 * median_inplace(input_amplitudes);
    validate(curve);
    return curve;
}

F3dbEstimate extract_f3db(const BodeCurve& curve) {
    validate(curve);
    const auto& pts = curve.points;
    const double target = dc_gain_db(curve) - kHalfPowerDb;

    std::size_t first_below = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].gain_db < target) {
            first_below = i;
            break;
        }
    }
    require(first_below < pts.size(), "-3 dB crossing not bracketed: no point below the level");
    require(first_below >= 2, "-3 dB crossing not bracketed: need two points above the level");

    const BodePoint& hi = pts[first_below - 1];
    const BodePoint& lo = pts[first_below];
    const double frac = (hi.gain_db - target) / (hi.gain_db - lo.gain_db);
    const double log_f = std::log10(hi.f_hz) + frac * (std::log10(lo.f_hz) - std::log10(hi.f_hz));

    bool monotonic = true;
    for (std::size_t i = first_below + 1; i < pts.size(); ++i)
        if (pts[i].gain_db >= target) monotonic = false;

    return F3dbEstimate{std::pow(10.0, log_f), monotonic};
}

SinglePoleFit fit_single_pole(const BodeCurve& curve, double noise_gain) {
    validate(curve);
    require(std::isfinite(noise_gain) && noise_gain >= 1.0, "noise gain must be >= 1");

    const double dc = dc_gain_db(curve);
    double min_gain = curve.points.front().gain_db;
    for (const auto& p : curve.points) min_gain = std::min(min_gain, p.gain_db);
    require(dc - min_gain >= 1.0, "insufficient rolloff: all points within 1 dB of the DC gain");

    // 1/|H|^2 = 1/G^2 + f^2 / (G^2 * f_pole^2): linear in f^2, so a centered
    // least-squares line gives the pole and DC gain in closed form.
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (const auto& p : curve.points) {
        if (p.gain_db < dc - 20.0) continue;
        sx += p.f_hz * p.f_hz;
        sy += std::pow(10.0, -p.gain_db / 10.0);
        ++n;
    }
    require(n >= 3, "too few points within 20 dB of the DC gain");
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : curve.points) {
        if (p.gain_db < dc - 20.0) continue;
        const double dx = p.f_hz * p.f_hz - mx;
        const double dy = std::pow(10.0, -p.gain_db / 10.0) - my;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    require(slope > 0.0 && intercept > 0.0, "curve is not consistent with a single-pole rolloff");

    SinglePoleFit fit;
    fit.g_dc_db = -10.0 * std::log10(intercept);
    fit.gbwp_hz = noise_gain * std::sqrt(intercept / slope);
    fit.noise_gain_used = noise_gain;
    return fit;
}

SlewRateEstimate extract_slew_rate(const Waveform& wave) {
    validate(wave);
    require(wave.samples.size() >= 8, "waveform too short for slew extraction");

    std::vector<double> sorted = wave.samples;
    std::sort(sorted.begin(), sorted.end());
    const double p5 = percentile(sorted, 0.05);
    const double p95 = percentile(sorted, 0.95);
    const double range = p95 - p5;
    const auto mm = kernels::reduce_min_max(wave.samples);
    require(range > 1e-12 * std::max({1.0, std::fabs(mm.min), std::fabs(mm.max)}),
            "no plateaus found: waveform has no usable swing");

    // Plateau sanity: a meaningful share of the samples must sit on each
    // level, otherwise (ramps, single slopes) the percentile levels are
    // meaningless.
    std::size_t low_cluster = 0, high_cluster = 0;
    for (double v : wave.samples) {
        if (v <= p5 + 0.02 * range) ++low_cluster;
        if (v >= p95 - 0.02 * range) ++high_cluster;
    }
    const double min_cluster = 0.10 * static_cast<double>(wave.samples.size());
    require(static_cast<double>(low_cluster) >= min_cluster &&
                static_cast<double>(high_cluster) >= min_cluster,
            "no stable plateaus found");

    const double lv10 = p5 + 0.10 * range;
    const double lv90 = p5 + 0.90 * range;
    const double dv = lv90 - lv10;

    std::vector<double> rising =
        edge_slopes(level_crossings(wave, lv10, true), level_crossings(wave, lv90, true), dv);
    std::vector<double> falling =
        edge_slopes(level_crossings(wave, lv90, false), level_crossings(wave, lv10, false), -dv);
    for (double& sl : falling) sl = -sl;  // report magnitudes

    require(!rising.empty() || !falling.empty(), "no full transition between the plateaus");

    std::vector<double> all = rising;
    all.insert(all.end(), falling.begin(), falling.end());

    SlewRateEstimate est;
    est.rising_edges = static_cast<int>(rising.size());
    est.falling_edges = static_cast<int>(falling.size());
    est.rising_v_per_s = rising.empty() ? 0.0 : median_inplace(rising);
    est.falling_v_per_s = falling.empty() ? 0.0 : median_inplace(falling);
    est.combined_v_per_s = median_inplace(all);
    return est;
}

double ramp_distortion_score(const Waveform& wave, double f_hz) {
    validate(wave);
    require(std::isfinite(f_hz) && f_hz > 0.0, "fundamental frequency must be > 0");

    const double samples_per_cycle = 1.0 / (f_hz * wave.dt_s);
    require(samples_per_cycle >= 64.0 * (1.0 - 1e-9), "need at least 64 samples per cycle");
    const double cycles_available = wave.duration_s() * f_hz;
    const long cycles = static_cast<long>(std::floor(cycles_available + 1e-9));
    require(cycles >= 2, "need at least 2 full cycles of the fundamental");

    std::size_t n_use = static_cast<std::size_t>(
        std::llround(static_cast<double>(cycles) * samples_per_cycle));
    n_use = std::min(n_use, wave.samples.size());

    // Trim to the last n_use samples: whole cycles, past any startup.
    const std::size_t offset = wave.samples.size() - n_use;
    std::span<const double> v(wave.samples.data() + offset, n_use);

    const double dtheta = 2.0 * kPi * f_hz * wave.dt_s;
    std::vector<double> s(n_use);
    std::vector<double> c(n_use);

    double fundamental = 0.0;
    double harmonic_power = 0.0;
    for (int k = 1; k <= 10; ++k) {
        kernels::fill_sine_cosine(s, c, 0.0, static_cast<double>(k) * dtheta);
        const double mag = std::hypot(kernels::dot(v, s), kernels::dot(v, c));
        if (k == 1)
            fundamental = mag;
        else
            harmonic_power += mag * mag;
    }

    const double rms = std::sqrt(kernels::dot(v, v) / static_cast<double>(n_use));
    // 2/n scaling cancels in the ratio; compare the fundamental in the same
    // normalization as the RMS.
    require(fundamental > 0.0 &&
                2.0 * fundamental / static_cast<double>(n_use) >= 0.01 * rms,
            "no carrier: fundamental below 1% of the waveform RMS");

    return std::sqrt(harmonic_power) / fundamental;
}

OutputSwing extract_vom(const Waveform& wave) {
    validate(wave);
    require(wave.samples.size() >= 8, "waveform too short for swing extraction");

    const auto mm = kernels::reduce_min_max(wave.samples);
    const double range = mm.max - mm.min;
    require(range > 0.0, "unclipped waveform: no swing at all");

    const double tol_top = mm.max != 0.0 ? 0.02 * std::fabs(mm.max) : 0.02 * range;
    const double tol_bot = mm.min != 0.0 ? 0.02 * std::fabs(mm.min) : 0.02 * range;

    std::vector<double> top;
    std::vector<double> bottom;
    for (double v : wave.samples) {
        if (v >= mm.max - tol_top) top.push_back(v);
        if (v <= mm.min + tol_bot) bottom.push_back(v);
    }
    const double min_cluster = 0.10 * static_cast<double>(wave.samples.size());
    require(static_cast<double>(top.size()) >= min_cluster &&
                static_cast<double>(bottom.size()) >= min_cluster,
            "unclipped waveform: rail plateaus hold less than 10% of the samples");

    return OutputSwing{median_inplace(top), median_inplace(bottom)};
}

} // namespace icscreen
