#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Behavioral op-amp macromodel: a single dominant pole with slew-rate
// limiting on the output derivative and hard clamping at the output rails.
// That is the simplest structure that reproduces both the closed-loop
// bandwidth collapse and the ramp-like large-signal distortion seen on
// slow parts, and every operation on it is a pure function.

namespace icscreen {

struct OpAmpModel {
    double a0_db = 100.0;          ///< open-loop DC gain, dB
    double gbwp_hz = 0.0;          ///< gain-bandwidth product, Hz
    double sr_v_per_s = 0.0;       ///< slew rate, V/s
    double vom_pos_v = 0.0;        ///< positive output rail, V (> 0)
    double vom_neg_v = 0.0;        ///< negative output rail, V (< 0)
    double icc_quiescent_a = 0.0;  ///< package quiescent supply current, A
    double icc_active_delta_a = 0.0;  ///< supply-current increase while amplifying, A
    std::string label;             ///< provenance tag, free text
};

/// Throws std::invalid_argument when a field violates the model contract.
void validate(const OpAmpModel& model);

enum class Topology { inverting, noninverting };

struct AmpConfig {
    Topology topology = Topology::inverting;
    double gain_magnitude = 20.0;
    double supply_v = 15.0;  ///< symmetric supply magnitude, V
};

void validate(const AmpConfig& cfg);

/// G + 1 for the inverting topology, G for the non-inverting one.
double noise_gain(const AmpConfig& cfg);

/// -G inverting, +G non-inverting: the gain the output actually tracks.
double signed_gain(const AmpConfig& cfg);

/// Uniformly sampled voltage capture. `samples[i]` was taken at
/// `t0_s + i * dt_s`.
struct Waveform {
    double dt_s = 0.0;
    double t0_s = 0.0;
    std::vector<double> samples;

    double time_at(std::size_t i) const { return t0_s + static_cast<double>(i) * dt_s; }
    double duration_s() const { return dt_s * static_cast<double>(samples.size()); }
};

void validate(const Waveform& wave);

struct FrequencyResponse {
    double gain_db;
    double phase_deg;  ///< normalized to (-180, 180]
};

/// Small-signal closed-loop response of the single-pole model:
/// |H| = G / sqrt(1 + (f*N/GBWP)^2), phase = ideal phase - atan(f*N/GBWP),
/// with N the noise gain and the ideal phase 180 deg (inverting) or 0.
FrequencyResponse closed_loop_gain(const OpAmpModel& model, const AmpConfig& cfg, double f_hz);

/// Closed-loop time constant N / (2*pi*GBWP) of the linear model.
double closed_loop_time_constant(const OpAmpModel& model, const AmpConfig& cfg);

/// Fixed-step forward integration of the closed-loop model. Per step the
/// linear target derivative is clamped to +/-SR, integrated, and the state
/// clamped to the rails; the output grid equals the input grid. Stable for
/// dt below the closed-loop time constant.
Waveform simulate_transient(const OpAmpModel& model, const AmpConfig& cfg, const Waveform& input);

/// Frequency above which a full-amplitude sine at `v_peak_out` exceeds the
/// slew limit: SR / (2*pi*v_peak_out).
double distortion_onset_freq(const OpAmpModel& model, double v_peak_out);

/// Supply current drawn by the package, optionally including the
/// while-amplifying increase.
double predicted_icc(const OpAmpModel& model, bool amplifying);

/// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

} // namespace icscreen
