#include "icscreen/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

#include "icscreen/errors.hpp"
#include "icscreen/kernels.hpp"

namespace icscreen {

namespace {

constexpr double kPi = std::numbers::pi;

using nlohmann::json;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

/// Strict decimal parse: the whole field must be consumed and the value
/// must be finite. No leading '+', no whitespace, no hex.
bool parse_number(std::string_view field, double& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out, std::chars_format::general);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string format_sig9(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
    return std::string(buf, ptr);
}

std::string format_exact(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

struct CsvReader {
    std::istream& in;
    std::string source;
    std::size_t line_no = 0;

    bool next_line(std::string& line) {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(source, line_no, message);
    }

    void expect_header(std::string_view header) {
        std::string line;
        if (!next_line(line)) throw ParseError(source, 1, "empty file: missing header");
        if (line != header)
            fail("bad header: expected \"" + std::string(header) + "\", got \"" + line + "\"");
    }

    /// Parses one data row with an exact column count.
    std::vector<double> parse_row(const std::string& line, std::size_t columns) {
        const auto fields = split_fields(line);
        if (fields.size() != columns)
            fail("expected " + std::to_string(columns) + " columns, got " +
                 std::to_string(fields.size()));
        std::vector<double> values(columns);
        for (std::size_t i = 0; i < columns; ++i)
            if (!parse_number(fields[i], values[i]))
                fail("malformed number in column " + std::to_string(i + 1) + ": \"" +
                     std::string(fields[i]) + "\"");
        return values;
    }
};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::optional<double> opt_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<double>();
}

void set_opt(json& j, const char* key, const std::optional<double>& value) {
    if (value) j[key] = *value;
}

json verdict_to_json(const Verdict& v) {
    return json{
        {"verdict", std::string(to_string(v.verdict))}, {"icc_a", v.icc_a},
        {"lsl_a", v.thresholds.lsl_a},                  {"usl_a", v.thresholds.usl_a},
        {"k", v.thresholds.k},                          {"tail_ppm", v.thresholds.tail_ppm},
    };
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.verdict = icc_verdict_from_string(j.at("verdict").get<std::string>());
    v.icc_a = j.at("icc_a").get<double>();
    v.thresholds.lsl_a = j.at("lsl_a").get<double>();
    v.thresholds.usl_a = j.at("usl_a").get<double>();
    v.thresholds.k = j.at("k").get<double>();
    v.thresholds.tail_ppm = j.at("tail_ppm").get<double>();
    return v;
}

json record_to_json(const ComponentRecord& r) {
    json j;
    j["id"] = r.id;
    j["label_manufacturer"] = r.label_manufacturer;
    j["date_code"] = r.date_code;
    set_opt(j, "icc_quiescent_a", r.icc_quiescent_a);
    set_opt(j, "icc_active_a", r.icc_active_a);
    set_opt(j, "gbwp_hz", r.gbwp_hz);
    set_opt(j, "sr_v_per_s", r.sr_v_per_s);
    set_opt(j, "vom_pos_v", r.vom_pos_v);
    set_opt(j, "vom_neg_v", r.vom_neg_v);
    if (r.verdict) j["verdict"] = verdict_to_json(*r.verdict);
    return j;
}

ComponentRecord record_from_json(const json& j) {
    ComponentRecord r;
    r.id = j.at("id").get<std::string>();
    r.label_manufacturer = j.value("label_manufacturer", std::string{});
    r.date_code = j.value("date_code", std::string{});
    r.icc_quiescent_a = opt_field(j, "icc_quiescent_a");
    r.icc_active_a = opt_field(j, "icc_active_a");
    r.gbwp_hz = opt_field(j, "gbwp_hz");
    r.sr_v_per_s = opt_field(j, "sr_v_per_s");
    r.vom_pos_v = opt_field(j, "vom_pos_v");
    r.vom_neg_v = opt_field(j, "vom_neg_v");
    if (j.contains("verdict")) r.verdict = verdict_from_json(j.at("verdict"));
    return r;
}

json population_to_json(const PopulationStats& p) {
    return json{{"mean_a", p.mean_a}, {"stddev_a", p.stddev_a}, {"n", p.n}};
}

PopulationStats population_from_json(const json& j) {
    return PopulationStats{j.at("mean_a").get<double>(), j.at("stddev_a").get<double>(),
                           j.at("n").get<std::size_t>()};
}

} // namespace

Waveform read_waveform_csv(std::istream& in, std::string_view source_name) {
    CsvReader reader{in, std::string(source_name)};
    reader.expect_header("time_s,voltage_v");

    std::vector<double> times;
    std::vector<double> volts;
    std::string line;
    while (reader.next_line(line)) {
        const auto row = reader.parse_row(line, 2);
        if (!times.empty() && row[0] <= times.back())
            reader.fail("time values must be strictly increasing");
        times.push_back(row[0]);
        volts.push_back(row[1]);
    }
    if (times.size() < 2) throw ParseError(reader.source, reader.line_no, "need at least 2 rows");

    std::vector<double> diffs(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) diffs[i] = times[i + 1] - times[i];
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    const double median_dt = sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (std::fabs(diffs[i] - median_dt) > 1e-3 * median_dt)
            throw ParseError(reader.source, i + 3,
                             "non-uniform sampling: interval deviates more than 0.1% from the "
                             "median dt");
    }

    Waveform wave;
    wave.t0_s = times.front();
    // The first interval, not the median: for files this writer produced the
    // first interval reconstructs the generating dt bit-exactly.
    wave.dt_s = diffs.front();
    wave.samples = std::move(volts);
    validate(wave);
    return wave;
}

Waveform read_waveform_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_waveform_csv(in, path.string());
}

void write_waveform_csv(const Waveform& wave, std::ostream& out) {
    validate(wave);
    out << "time_s,voltage_v\n";
    for (std::size_t i = 0; i < wave.samples.size(); ++i)
        out << format_exact(wave.time_at(i)) << ',' << format_sig9(wave.samples[i]) << '\n';
}

void write_waveform_csv(const Waveform& wave, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_waveform_csv(wave, out);
}

BodeCurve read_sweep_csv(std::istream& in, std::string_view source_name) {
    CsvReader reader{in, std::string(source_name)};
    reader.expect_header("freq_hz,gain_db,phase_deg");

    BodeCurve curve;
    std::string line;
    while (reader.next_line(line)) {
        const auto row = reader.parse_row(line, 3);
        if (!(row[0] > 0.0)) reader.fail("frequency must be > 0");
        if (!curve.points.empty()) {
            if (row[0] == curve.points.back().f_hz)
                reader.fail("duplicate sweep frequency " + format_sig9(row[0]) + " Hz");
            if (row[0] < curve.points.back().f_hz)
                reader.fail("sweep frequencies must be strictly increasing");
        }
        curve.points.push_back(BodePoint{row[0], row[1], row[2]});
    }
    if (curve.points.empty())
        throw ParseError(reader.source, reader.line_no, "sweep contains no points");
    validate(curve);
    return curve;
}

BodeCurve read_sweep_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_sweep_csv(in, path.string());
}

void write_sweep_csv(const BodeCurve& curve, std::ostream& out) {
    validate(curve);
    out << "freq_hz,gain_db,phase_deg\n";
    for (const auto& p : curve.points)
        out << format_sig9(p.f_hz) << ',' << format_sig9(p.gain_db) << ','
            << format_sig9(p.phase_deg) << '\n';
}

void write_sweep_csv(const BodeCurve& curve, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_sweep_csv(curve, out);
}

std::vector<double> read_population_csv(std::istream& in, std::string_view source_name) {
    CsvReader reader{in, std::string(source_name)};
    reader.expect_header("icc_ma");

    std::vector<double> amps;
    std::string line;
    while (reader.next_line(line)) {
        const auto row = reader.parse_row(line, 1);
        if (!(row[0] > 0.0)) reader.fail("current must be a positive mA value");
        amps.push_back(row[0] * 1e-3);
    }
    return amps;
}

std::vector<double> read_population_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_population_csv(in, path.string());
}

void validate(const ComponentRecord& record) {
    require(!record.id.empty(), "component id must be non-empty");
    auto check_pos = [](const std::optional<double>& v, const char* name) {
        if (v && !(std::isfinite(*v) && *v > 0.0))
            throw std::invalid_argument(std::string(name) + " must be finite and positive");
    };
    check_pos(record.icc_quiescent_a, "icc_quiescent_a");
    check_pos(record.icc_active_a, "icc_active_a");
    check_pos(record.gbwp_hz, "gbwp_hz");
    check_pos(record.sr_v_per_s, "sr_v_per_s");
    check_pos(record.vom_pos_v, "vom_pos_v");
    if (record.vom_neg_v && !(std::isfinite(*record.vom_neg_v) && *record.vom_neg_v < 0.0))
        throw std::invalid_argument("vom_neg_v must be finite and negative");
    if (record.verdict) {
        // A stored verdict must agree with the interval test on its own fields.
        const Verdict recomputed = classify_icc(record.verdict->icc_a, record.verdict->thresholds);
        if (recomputed.verdict != record.verdict->verdict)
            throw std::invalid_argument("verdict inconsistent with its measured value and limits");
    }
}

std::vector<ComponentRecord> component_db_load(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<ComponentRecord> records;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) throw ParseError(path.string(), line_no, "empty record line");
        ComponentRecord record;
        try {
            record = record_from_json(json::parse(line));
            validate(record);
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, std::string("malformed record: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string(), line_no, std::string("invalid record: ") + e.what());
        }
        if (!ids.insert(record.id).second)
            throw ParseError(path.string(), line_no, "duplicate component id \"" + record.id + "\"");
        records.push_back(std::move(record));
    }
    return records;
}

void component_db_append(const std::filesystem::path& path, const ComponentRecord& record) {
    validate(record);
    if (std::filesystem::exists(path)) {
        for (const auto& existing : component_db_load(path))
            if (existing.id == record.id)
                throw std::invalid_argument("duplicate component id \"" + record.id +
                                            "\": database left unchanged");
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for appending");
    out << record_to_json(record).dump() << '\n';
}

void write_thresholds_json(const ThresholdsFile& file, std::ostream& out) {
    validate(file.thresholds);
    json j;
    j["lsl_a"] = file.thresholds.lsl_a;
    j["usl_a"] = file.thresholds.usl_a;
    j["k"] = file.thresholds.k;
    j["tail_ppm"] = file.thresholds.tail_ppm;
    j["genuine"] = population_to_json(file.genuine);
    j["counterfeit"] = population_to_json(file.counterfeit);
    if (!file.fitted_at.empty()) j["fitted_at"] = file.fitted_at;
    out << j.dump(2) << '\n';
}

void write_thresholds_json(const ThresholdsFile& file, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_thresholds_json(file, out);
}

ThresholdsFile read_thresholds_json(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(source, 1, std::string("malformed thresholds JSON: ") + e.what());
    }

    ThresholdsFile file;
    try {
        file.thresholds.lsl_a = j.at("lsl_a").get<double>();
        file.thresholds.usl_a = j.at("usl_a").get<double>();
        file.thresholds.k = j.at("k").get<double>();
        file.thresholds.tail_ppm = j.at("tail_ppm").get<double>();
        file.genuine = population_from_json(j.at("genuine"));
        file.counterfeit = population_from_json(j.at("counterfeit"));
        file.fitted_at = j.value("fitted_at", std::string{});
        validate(file.thresholds);
        validate(file.genuine);
        validate(file.counterfeit);
    } catch (const json::exception& e) {
        throw ParseError(source, 1, std::string("malformed thresholds JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, 1, std::string("invalid thresholds: ") + e.what());
    }

    // The stored limits must be re-derivable from the embedded populations.
    const Separation sep = separation_k(file.genuine, file.counterfeit);
    const double lsl = compute_lsl(file.genuine, file.counterfeit);
    if (sep.infinite || std::fabs(sep.k - file.thresholds.k) > 1e-9 * std::fabs(file.thresholds.k))
        throw ParseError(source, 1, "thresholds inconsistent: k does not match the population stats");
    if (std::fabs(lsl - file.thresholds.lsl_a) > 1e-9 * std::fabs(file.thresholds.lsl_a))
        throw ParseError(source, 1,
                         "thresholds inconsistent: lsl_a does not match the population stats");
    return file;
}

ThresholdsFile read_thresholds_json(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_thresholds_json(in, path.string());
}

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

SynthCapture synth_capture(const OpAmpModel& model, const AmpConfig& cfg,
                           const Stimulus& stimulus, int cycles, int samples_per_cycle,
                           double noise_vpp, std::uint64_t seed) {
    validate(model);
    validate(cfg);
    require(cycles >= 2, "need at least 2 capture cycles");
    require(samples_per_cycle >= 64, "need at least 64 samples per cycle");
    require(std::isfinite(stimulus.freq_hz) && stimulus.freq_hz > 0.0,
            "stimulus frequency must be > 0");
    require(std::isfinite(stimulus.vpp) && stimulus.vpp > 0.0, "stimulus amplitude must be > 0");
    require(std::isfinite(noise_vpp) && noise_vpp >= 0.0, "noise_vpp must be >= 0");

    const double f = stimulus.freq_hz;
    const double dt_out = 1.0 / (f * static_cast<double>(samples_per_cycle));

    // Refine the integration grid where the requested grid is too coarse for
    // the forward integrator. The step bias scales with w^2/(1+w^2), w being
    // the frequency relative to the closed-loop corner: far below the corner
    // only stability (dt < tau) matters, near and above it the step must
    // shrink to hold the gain bias under ~0.2% and the phase bias under
    // ~0.1 degrees.
    const double tau = closed_loop_time_constant(model, cfg);
    const double w = 2.0 * kPi * f * tau;
    const double w2 = w * w;
    const double gain_bound = tau * std::min(0.5, 0.004 * (1.0 + w2) / w2);
    const double phase_bound = 2.0 * 0.00175 * tau * (1.0 + w2) / (w2 * w);
    // A slew-limited transit must span several integration steps.
    const double range = model.vom_pos_v - model.vom_neg_v;
    const double slew_bound = 0.25 * range / model.sr_v_per_s;
    const double dt_max = std::min({gain_bound, phase_bound, slew_bound});
    const int refine = std::max(1, static_cast<int>(std::ceil(dt_out / dt_max)));
    const double dt_sim = dt_out / refine;

    // Discard a pre-roll long enough for the linear settling and for slewing
    // across the swing the stimulus can actually command, so the capture is
    // steady state. Whole cycles keep the stimulus phase at zero at the
    // capture start.
    const double swing = std::min(range, std::fabs(signed_gain(cfg)) * stimulus.vpp);
    const double settle_s = 8.0 * tau + 2.0 * swing / model.sr_v_per_s;
    const long preroll_cycles = static_cast<long>(std::ceil(settle_s * f)) + 1;

    const std::size_t spc_sim =
        static_cast<std::size_t>(samples_per_cycle) * static_cast<std::size_t>(refine);
    const std::size_t n_sim = (static_cast<std::size_t>(preroll_cycles) +
                               static_cast<std::size_t>(cycles)) *
                              spc_sim;
    require(n_sim <= 200'000'000,
            "capture needs too many integration steps; raise the stimulus frequency or relax "
            "the model");

    Waveform fine;
    fine.dt_s = dt_sim;
    fine.t0_s = 0.0;
    fine.samples.resize(n_sim);
    const double amplitude = stimulus.vpp / 2.0;
    if (stimulus.kind == StimulusKind::sine) {
        kernels::fill_sine(fine.samples, 0.0, 2.0 * kPi * f * dt_sim, amplitude);
    } else {
        for (std::size_t i = 0; i < n_sim; ++i) {
            const std::size_t pos = i % spc_sim;
            fine.samples[i] = (2 * pos < spc_sim) ? amplitude : -amplitude;
        }
    }

    const Waveform fine_out = simulate_transient(model, cfg, fine);

    const std::size_t skip = static_cast<std::size_t>(preroll_cycles) * spc_sim;
    const std::size_t n_out =
        static_cast<std::size_t>(cycles) * static_cast<std::size_t>(samples_per_cycle);

    SynthCapture capture;
    capture.input.dt_s = dt_out;
    capture.input.t0_s = 0.0;
    capture.input.samples.resize(n_out);
    capture.output.dt_s = dt_out;
    capture.output.t0_s = 0.0;
    capture.output.samples.resize(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
        capture.input.samples[j] = fine.samples[skip + j * refine];
        capture.output.samples[j] = fine_out.samples[skip + j * refine];
    }

    if (noise_vpp > 0.0) {
        std::mt19937_64 rng(seed);
        for (double& v : capture.output.samples) {
            // Explicit 53-bit mapping keeps the stream identical across
            // standard libraries.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            v += (u - 0.5) * noise_vpp;
        }
    }
    return capture;
}

} // namespace icscreen
