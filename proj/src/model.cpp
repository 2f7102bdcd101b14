#include "icscreen/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace icscreen {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

/// The single-pole approximation needs loop gain at DC, so the noise gain
/// must sit below the open-loop DC gain. Checked at simulation entry.
void check_loop_gain(const OpAmpModel& model, const AmpConfig& cfg) {
    const double n = noise_gain(cfg);
    if (20.0 * std::log10(n) >= model.a0_db)
        throw std::invalid_argument(
            "noise gain reaches the open-loop DC gain; configuration has no loop gain");
}

} // namespace

void validate(const OpAmpModel& model) {
    require(std::isfinite(model.a0_db), "a0_db must be finite");
    require(std::isfinite(model.gbwp_hz) && model.gbwp_hz > 0.0, "gbwp_hz must be > 0");
    require(std::isfinite(model.sr_v_per_s) && model.sr_v_per_s > 0.0, "sr_v_per_s must be > 0");
    require(std::isfinite(model.vom_pos_v) && model.vom_pos_v > 0.0, "vom_pos_v must be > 0");
    require(std::isfinite(model.vom_neg_v) && model.vom_neg_v < 0.0, "vom_neg_v must be < 0");
    require(std::isfinite(model.icc_quiescent_a) && model.icc_quiescent_a >= 0.0,
            "icc_quiescent_a must be >= 0");
    require(std::isfinite(model.icc_active_delta_a) && model.icc_active_delta_a >= 0.0,
            "icc_active_delta_a must be >= 0");
}

void validate(const AmpConfig& cfg) {
    require(std::isfinite(cfg.gain_magnitude) && cfg.gain_magnitude > 0.0,
            "gain_magnitude must be > 0");
    if (cfg.topology == Topology::noninverting)
        require(cfg.gain_magnitude >= 1.0, "noninverting gain_magnitude must be >= 1");
    require(std::isfinite(cfg.supply_v) && cfg.supply_v > 0.0, "supply_v must be > 0");
}

double noise_gain(const AmpConfig& cfg) {
    return cfg.topology == Topology::inverting ? cfg.gain_magnitude + 1.0 : cfg.gain_magnitude;
}

double signed_gain(const AmpConfig& cfg) {
    return cfg.topology == Topology::inverting ? -cfg.gain_magnitude : cfg.gain_magnitude;
}

void validate(const Waveform& wave) {
    require(std::isfinite(wave.dt_s) && wave.dt_s > 0.0, "waveform dt_s must be > 0");
    require(std::isfinite(wave.t0_s), "waveform t0_s must be finite");
    require(!wave.samples.empty(), "waveform must contain samples");
    for (double v : wave.samples)
        if (!std::isfinite(v)) throw std::invalid_argument("waveform sample is not finite");
}

double wrap_degrees(double deg) {
    double x = std::fmod(deg + 180.0, 360.0);
    if (x <= 0.0) x += 360.0;
    return x - 180.0;
}

FrequencyResponse closed_loop_gain(const OpAmpModel& model, const AmpConfig& cfg, double f_hz) {
    validate(model);
    validate(cfg);
    check_loop_gain(model, cfg);
    if (!(std::isfinite(f_hz) && f_hz > 0.0))
        throw std::invalid_argument("frequency must be > 0");

    const double x = f_hz * noise_gain(cfg) / model.gbwp_hz;
    const double magnitude = cfg.gain_magnitude / std::sqrt(1.0 + x * x);
    const double ideal_phase = cfg.topology == Topology::inverting ? 180.0 : 0.0;
    const double phase = ideal_phase - std::atan(x) * (180.0 / kPi);
    return FrequencyResponse{20.0 * std::log10(magnitude), wrap_degrees(phase)};
}

double closed_loop_time_constant(const OpAmpModel& model, const AmpConfig& cfg) {
    return noise_gain(cfg) / (2.0 * kPi * model.gbwp_hz);
}

Waveform simulate_transient(const OpAmpModel& model, const AmpConfig& cfg, const Waveform& input) {
    validate(model);
    validate(cfg);
    validate(input);
    check_loop_gain(model, cfg);

    const double range = model.vom_pos_v - model.vom_neg_v;
    if (input.dt_s * model.sr_v_per_s > range)
        throw std::invalid_argument(
            "dt too coarse: one slew-limited step exceeds the full output range");

    const double tau = closed_loop_time_constant(model, cfg);
    const double g = signed_gain(cfg);
    const double sr = model.sr_v_per_s;
    const double dt = input.dt_s;

    Waveform out;
    out.dt_s = input.dt_s;
    out.t0_s = input.t0_s;
    out.samples.resize(input.samples.size());

    double y = 0.0;
    out.samples[0] = y;
    for (std::size_t i = 1; i < input.samples.size(); ++i) {
        double deriv = (g * input.samples[i - 1] - y) / tau;
        deriv = std::clamp(deriv, -sr, sr);
        y += dt * deriv;
        y = std::clamp(y, model.vom_neg_v, model.vom_pos_v);
        out.samples[i] = y;
    }
    return out;
}

double distortion_onset_freq(const OpAmpModel& model, double v_peak_out) {
    validate(model);
    if (!(std::isfinite(v_peak_out) && v_peak_out > 0.0))
        throw std::invalid_argument("v_peak_out must be > 0");
    return model.sr_v_per_s / (2.0 * kPi * v_peak_out);
}

double predicted_icc(const OpAmpModel& model, bool amplifying) {
    validate(model);
    return model.icc_quiescent_a + (amplifying ? model.icc_active_delta_a : 0.0);
}

} // namespace icscreen
