#pragma once

#include <string>
#include <vector>

#include "icscreen/model.hpp"

// Signature extraction from captures: sine fitting, Bode construction,
// bandwidth and gain-bandwidth estimation, slew-rate and output-swing
// measurement, and a scale-invariant ramp-distortion (THD) score.

namespace icscreen {

struct BodePoint {
    double f_hz;
    double gain_db;
    double phase_deg;
};

struct BodeCurve {
    std::vector<BodePoint> points;  ///< strictly increasing positive frequencies
    double input_vpp = 0.0;         ///< stimulus amplitude the sweep was taken at, V peak-peak
    std::string description;        ///< free-text configuration note
};

void validate(const BodeCurve& curve);

struct SinFit {
    double amplitude_v;
    double phase_rad;
    double offset_v;
    double freq_hz;
    double residual_rms_v;
};

/// Three-parameter linear least squares on the {sin, cos, 1} basis at a known
/// frequency. The wave must span at least two full cycles with at least 16
/// samples per cycle. Fit convention: v(t) ~ A*sin(2*pi*f*t + phase) + offset.
SinFit fit_sine(const Waveform& wave, double f_hz);

struct CapturePair {
    double f_hz;
    Waveform input;
    Waveform output;
};

/// Builds a Bode curve from per-frequency input/output captures:
/// gain = 20*log10(A_out/A_in), phase = out minus in wrapped to (-180, 180].
/// Points come back sorted by frequency; duplicate frequencies are rejected.
BodeCurve bode_from_pairs(const std::vector<CapturePair>& captures,
                          std::string description = {});

struct F3dbEstimate {
    double f3db_hz;
    /// False when the gain rises back above the -3 dB level after the first
    /// crossing; the first crossing is still reported.
    bool crossing_monotonic;
};

/// Log-frequency interpolation of the crossing of (DC gain - 3.0103 dB),
/// with the DC gain taken as the mean gain of the lowest measured decade.
F3dbEstimate extract_f3db(const BodeCurve& curve);

struct SinglePoleFit {
    double g_dc_db;
    double gbwp_hz;
    double noise_gain_used;
};

/// Least-squares fit of the single-pole magnitude law over the points within
/// 20 dB of the DC gain. In the 1/|H|^2 domain the law is exactly linear in
/// f^2, so the fit is closed-form. gbwp = noise_gain * fitted pole frequency.
SinglePoleFit fit_single_pole(const BodeCurve& curve, double noise_gain);

struct SlewRateEstimate {
    double rising_v_per_s;    ///< median 10-90% secant slope of rising edges (0 if none)
    double falling_v_per_s;   ///< median magnitude over falling edges (0 if none)
    double combined_v_per_s;  ///< median magnitude over all edges
    int rising_edges;
    int falling_edges;
};

/// Secant slope between the 10% and 90% crossings of each transition between
/// the 5th/95th-percentile plateau levels, reported as the median per edge
/// polarity. Requires stable plateaus on both levels.
SlewRateEstimate extract_slew_rate(const Waveform& wave);

/// Total harmonic distortion at a known fundamental: RMS of harmonics 2-10
/// relative to the fundamental, evaluated over a whole number of cycles
/// (the wave is trimmed internally). Needs >= 2 cycles and >= 64 samples per
/// cycle, and a fundamental of at least 1% of the waveform RMS.
double ramp_distortion_score(const Waveform& wave, double f_hz);

struct OutputSwing {
    double vom_pos_v;
    double vom_neg_v;
};

/// Rail estimate for a clipped capture: median of the top and bottom plateau
/// clusters (samples within 2% of the extreme values). Rejects waveforms
/// whose clusters hold less than 10% of the samples each.
OutputSwing extract_vom(const Waveform& wave);

} // namespace icscreen
