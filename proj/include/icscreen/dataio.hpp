#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icscreen/analysis.hpp"
#include "icscreen/model.hpp"
#include "icscreen/screening.hpp"

// File formats and synthetic-capture generation.
//
//   waveform CSV   header `time_s,voltage_v`, one sample per line
//   sweep CSV      header `freq_hz,gain_db,phase_deg`
//   population CSV header `icc_ma`, one current (mA) per line
//   component DB   newline-delimited JSON objects, append-only
//   thresholds     single JSON object
//
// Readers are strict: malformed input is rejected with a ParseError naming
// the offending line, never repaired. Writers emit LF line endings and
// 9-significant-digit decimals for measured quantities; the waveform time
// column is written with full precision so the sampling grid survives a
// round trip exactly.

namespace icscreen {

Waveform read_waveform_csv(std::istream& in, std::string_view source_name = "<stream>");
Waveform read_waveform_csv(const std::filesystem::path& path);
void write_waveform_csv(const Waveform& wave, std::ostream& out);
void write_waveform_csv(const Waveform& wave, const std::filesystem::path& path);

BodeCurve read_sweep_csv(std::istream& in, std::string_view source_name = "<stream>");
BodeCurve read_sweep_csv(const std::filesystem::path& path);
void write_sweep_csv(const BodeCurve& curve, std::ostream& out);
void write_sweep_csv(const BodeCurve& curve, const std::filesystem::path& path);

/// Single-column current file, header `icc_ma`, values in mA.
/// Returns the values converted to amperes.
std::vector<double> read_population_csv(std::istream& in,
                                        std::string_view source_name = "<stream>");
std::vector<double> read_population_csv(const std::filesystem::path& path);

struct ComponentRecord {
    std::string id;  ///< non-empty, unique within a database file
    std::string label_manufacturer;
    std::string date_code;
    std::optional<double> icc_quiescent_a;
    std::optional<double> icc_active_a;
    std::optional<double> gbwp_hz;
    std::optional<double> sr_v_per_s;
    std::optional<double> vom_pos_v;
    std::optional<double> vom_neg_v;
    std::optional<Verdict> verdict;
};

void validate(const ComponentRecord& record);

/// Appends one record; rejects duplicate ids without touching the file.
void component_db_append(const std::filesystem::path& path, const ComponentRecord& record);
/// Loads the whole database, preserving insertion order. A malformed line
/// aborts the load with a ParseError naming it.
std::vector<ComponentRecord> component_db_load(const std::filesystem::path& path);

struct ThresholdsFile {
    ScreeningThresholds thresholds;
    PopulationStats genuine;
    PopulationStats counterfeit;
    std::string fitted_at;  ///< ISO-8601 UTC; empty when suppressed
};

/// Serializes thresholds plus the population stats they were derived from.
void write_thresholds_json(const ThresholdsFile& file, std::ostream& out);
void write_thresholds_json(const ThresholdsFile& file, const std::filesystem::path& path);
/// Reads and cross-checks: k and the LSL must be re-derivable from the
/// embedded population stats to 1e-9 relative.
ThresholdsFile read_thresholds_json(std::istream& in,
                                    std::string_view source_name = "<stream>");
ThresholdsFile read_thresholds_json(const std::filesystem::path& path);

/// Current ISO-8601 UTC timestamp, e.g. "2025-01-31T12:00:00Z".
std::string iso8601_utc_now();

enum class StimulusKind { sine, square };

struct Stimulus {
    StimulusKind kind;
    double freq_hz;
    double vpp;
};

struct SynthCapture {
    Waveform input;
    Waveform output;
};

/// Simulates a steady-state capture of the model under the given stimulus:
/// the transient is integrated on an internally refined grid (the requested
/// grid can be far coarser than the closed-loop time constant), a
/// deterministic pre-roll long enough for slewing and the linear settling is
/// discarded, and uniform +/-noise_vpp/2 noise is added to the output.
/// Identical arguments always produce identical waveforms.
SynthCapture synth_capture(const OpAmpModel& model, const AmpConfig& cfg,
                           const Stimulus& stimulus, int cycles, int samples_per_cycle,
                           double noise_vpp, std::uint64_t seed);

} // namespace icscreen
