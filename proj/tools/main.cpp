// icscreen: simulate, analyze, and screen op-amp specimens from the command
// line. Exit codes: 0 success (or screening pass), 1 usage or data error,
// 2 screening verdict suspect_low or fail_high.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icscreen/analysis.hpp"
#include "icscreen/dataio.hpp"
#include "icscreen/errors.hpp"
#include "icscreen/model.hpp"
#include "icscreen/screening.hpp"

namespace {

using namespace icscreen;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerdict = 2;

std::string num(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

struct ModelFlags {
    double gbwp_hz = 0.0;
    double sr_v_per_us = 13.0;
    double vom_v = 13.5;
    double a0_db = 100.0;
    std::string topology = "inverting";
    double gain = 20.0;
    double supply_v = 15.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--gbwp-hz", gbwp_hz, "gain-bandwidth product, Hz")->required();
        cmd->add_option("--sr-v-per-us", sr_v_per_us, "slew rate, V/us (default 13)");
        cmd->add_option("--vom-v", vom_v, "output swing magnitude, V (default 13.5)");
        cmd->add_option("--a0-db", a0_db, "open-loop DC gain, dB (default 100)");
        cmd->add_option("--topology", topology, "inverting|noninverting (default inverting)")
            ->check(CLI::IsMember({"inverting", "noninverting"}));
        cmd->add_option("--gain", gain, "closed-loop gain magnitude (default 20)");
        cmd->add_option("--supply-v", supply_v, "symmetric supply magnitude, V (default 15)");
    }

    OpAmpModel model() const {
        if (vom_v > supply_v)
            throw std::runtime_error("--vom-v must not exceed --supply-v");
        OpAmpModel m;
        m.a0_db = a0_db;
        m.gbwp_hz = gbwp_hz;
        m.sr_v_per_s = sr_v_per_us * 1e6;
        m.vom_pos_v = vom_v;
        m.vom_neg_v = -vom_v;
        m.label = "cli";
        return m;
    }

    AmpConfig config() const {
        AmpConfig cfg;
        cfg.topology = topology == "inverting" ? Topology::inverting : Topology::noninverting;
        cfg.gain_magnitude = gain;
        cfg.supply_v = supply_v;
        return cfg;
    }
};

Stimulus parse_stimulus(const std::string& spec) {
    const auto first = spec.find(':');
    const auto second = spec.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw std::runtime_error("--stim must look like sine:<freq_hz>:<vpp> or "
                                 "square:<freq_hz>:<vpp>");
    const std::string kind = spec.substr(0, first);
    Stimulus stim{};
    if (kind == "sine")
        stim.kind = StimulusKind::sine;
    else if (kind == "square")
        stim.kind = StimulusKind::square;
    else
        throw std::runtime_error("--stim kind must be sine or square");
    try {
        std::size_t used = 0;
        const std::string f_part = spec.substr(first + 1, second - first - 1);
        stim.freq_hz = std::stod(f_part, &used);
        if (used != f_part.size()) throw std::invalid_argument(f_part);
        const std::string v_part = spec.substr(second + 1);
        stim.vpp = std::stod(v_part, &used);
        if (used != v_part.size()) throw std::invalid_argument(v_part);
    } catch (const std::exception&) {
        throw std::runtime_error("--stim has a malformed number in \"" + spec + "\"");
    }
    if (!(stim.freq_hz > 0.0) || !(stim.vpp > 0.0))
        throw std::runtime_error("--stim frequency and amplitude must be > 0");
    return stim;
}

int run_simulate_bode(const ModelFlags& flags, double fmin, double fmax, int points_per_decade,
                      const std::string& out_path) {
    if (!(fmin > 0.0) || !(fmax > fmin))
        throw std::runtime_error("--fmin/--fmax must satisfy 0 < fmin < fmax");
    if (points_per_decade < 1) throw std::runtime_error("--points-per-decade must be >= 1");

    const OpAmpModel model = flags.model();
    const AmpConfig cfg = flags.config();

    BodeCurve curve;
    curve.input_vpp = 1.0;
    curve.description = flags.topology + " gain " + num(flags.gain);
    for (int i = 0;; ++i) {
        const double f = fmin * std::pow(10.0, static_cast<double>(i) / points_per_decade);
        if (f > fmax * (1.0 + 1e-9)) break;
        const FrequencyResponse resp = closed_loop_gain(model, cfg, f);
        curve.points.push_back(BodePoint{f, resp.gain_db, resp.phase_deg});
    }
    write_sweep_csv(curve, std::filesystem::path(out_path));
    std::cout << "points=" << curve.points.size() << "\n";
    std::cout << "output=" << out_path << "\n";
    return kExitOk;
}

int run_simulate_transient(const ModelFlags& flags, const std::string& stim_spec, int cycles,
                           int samples_per_cycle, double noise_vpp, std::uint64_t seed,
                           const std::string& out_path, const std::string& dump_input_path) {
    const Stimulus stim = parse_stimulus(stim_spec);
    const SynthCapture capture = synth_capture(flags.model(), flags.config(), stim, cycles,
                                               samples_per_cycle, noise_vpp, seed);
    write_waveform_csv(capture.output, std::filesystem::path(out_path));
    if (!dump_input_path.empty())
        write_waveform_csv(capture.input, std::filesystem::path(dump_input_path));
    std::cout << "samples=" << capture.output.samples.size() << "\n";
    std::cout << "output=" << out_path << "\n";
    return kExitOk;
}

int run_analyze_sweep(double noise_gain_value, const std::string& path) {
    const BodeCurve curve = read_sweep_csv(std::filesystem::path(path));
    const SinglePoleFit fit = fit_single_pole(curve, noise_gain_value);
    const F3dbEstimate f3db = extract_f3db(curve);
    std::cout << "g_dc_db=" << num(fit.g_dc_db) << "\n";
    std::cout << "f3db_hz=" << num(f3db.f3db_hz) << "\n";
    std::cout << "f3db_model_hz=" << num(fit.gbwp_hz / fit.noise_gain_used) << "\n";
    std::cout << "gbwp_hz=" << num(fit.gbwp_hz) << "\n";
    std::cout << "noise_gain=" << num(fit.noise_gain_used) << "\n";
    if (!f3db.crossing_monotonic) std::cout << "f3db_warning=nonmonotonic_crossing\n";
    return kExitOk;
}

int run_analyze_waveform(const std::string& kind, std::optional<double> freq,
                         const std::string& path) {
    const Waveform wave = read_waveform_csv(std::filesystem::path(path));
    if (kind == "slew") {
        const SlewRateEstimate est = extract_slew_rate(wave);
        std::cout << "sr_v_per_us=" << num(est.combined_v_per_s * 1e-6) << "\n";
        std::cout << "sr_pos_v_per_us=" << num(est.rising_v_per_s * 1e-6) << "\n";
        std::cout << "sr_neg_v_per_us=" << num(est.falling_v_per_s * 1e-6) << "\n";
        std::cout << "rising_edges=" << est.rising_edges << "\n";
        std::cout << "falling_edges=" << est.falling_edges << "\n";
    } else if (kind == "distortion") {
        if (!freq) throw std::runtime_error("--freq is required for --kind distortion");
        std::cout << "thd=" << num(ramp_distortion_score(wave, *freq)) << "\n";
    } else {  // vom (membership enforced by the flag check)
        const OutputSwing swing = extract_vom(wave);
        std::cout << "vom_pos_v=" << num(swing.vom_pos_v) << "\n";
        std::cout << "vom_neg_v=" << num(swing.vom_neg_v) << "\n";
    }
    return kExitOk;
}

int run_screen_fit(const std::string& genuine_path, const std::string& counterfeit_path,
                   double usl_ma, bool no_timestamp, const std::string& out_path) {
    const std::vector<double> genuine_a =
        read_population_csv(std::filesystem::path(genuine_path));
    const std::vector<double> counterfeit_a =
        read_population_csv(std::filesystem::path(counterfeit_path));

    ThresholdsFile file;
    file.genuine = fit_population(genuine_a);
    file.counterfeit = fit_population(counterfeit_a);
    file.thresholds = derive_thresholds(file.genuine, file.counterfeit, usl_ma * 1e-3);
    if (!no_timestamp) file.fitted_at = iso8601_utc_now();
    write_thresholds_json(file, std::filesystem::path(out_path));

    std::cout << "k=" << num(file.thresholds.k) << "\n";
    std::cout << "lsl_ma=" << num(file.thresholds.lsl_a * 1e3) << "\n";
    std::cout << "usl_ma=" << num(file.thresholds.usl_a * 1e3) << "\n";
    std::cout << "tail_ppm=" << num(file.thresholds.tail_ppm) << "\n";
    std::cout << "n_genuine=" << file.genuine.n << "\n";
    std::cout << "n_counterfeit=" << file.counterfeit.n << "\n";
    std::cout << "output=" << out_path << "\n";
    return kExitOk;
}

int run_screen_classify(const std::string& thresholds_path, std::optional<double> icc_ma,
                        std::optional<double> vdrop_mv, std::optional<double> icc_active_ma,
                        double min_delta_ma) {
    if (icc_ma.has_value() == vdrop_mv.has_value())
        throw std::runtime_error("exactly one of --icc-ma or --vdrop-mv is required");
    // 1 ohm sense resistor: the drop in mV reads directly in mA.
    const double measured_ma = icc_ma ? *icc_ma : *vdrop_mv;

    const ThresholdsFile file = read_thresholds_json(std::filesystem::path(thresholds_path));
    const Verdict verdict = classify_icc(measured_ma * 1e-3, file.thresholds);

    std::cout << "icc_ma=" << num(measured_ma) << "\n";
    std::cout << "lsl_ma=" << num(file.thresholds.lsl_a * 1e3) << "\n";
    std::cout << "usl_ma=" << num(file.thresholds.usl_a * 1e3) << "\n";
    std::cout << "verdict=" << to_string(verdict.verdict) << "\n";
    if (icc_active_ma) {
        const bool genuine_consistent =
            delta_icc_test(measured_ma * 1e-3, *icc_active_ma * 1e-3, min_delta_ma * 1e-3);
        std::cout << "delta_icc_ma=" << num(*icc_active_ma - measured_ma) << "\n";
        std::cout << "delta_min_ma=" << num(min_delta_ma) << "\n";
        std::cout << "delta_test="
                  << (genuine_consistent ? "genuine-consistent" : "counterfeit-consistent")
                  << "\n";
    }
    return verdict.verdict == IccVerdict::pass ? kExitOk : kExitVerdict;
}

int run_report(const std::string& db_path) {
    const std::vector<ComponentRecord> records =
        component_db_load(std::filesystem::path(db_path));

    std::size_t pass = 0, suspect = 0, fail = 0, unscreened = 0;
    for (const auto& r : records) {
        if (!r.verdict) {
            ++unscreened;
        } else if (r.verdict->verdict == IccVerdict::pass) {
            ++pass;
        } else if (r.verdict->verdict == IccVerdict::suspect_low) {
            ++suspect;
        } else {
            ++fail;
        }
    }
    std::cout << "records=" << records.size() << "\n";
    std::cout << "pass=" << pass << "\n";
    std::cout << "suspect_low=" << suspect << "\n";
    std::cout << "fail_high=" << fail << "\n";
    std::cout << "unscreened=" << unscreened << "\n";
    for (const auto& r : records) {
        std::cout << "record id=" << r.id;
        std::cout << " manufacturer=" << (r.label_manufacturer.empty() ? "-" : r.label_manufacturer);
        std::cout << " date_code=" << (r.date_code.empty() ? "-" : r.date_code);
        std::cout << " icc_ma="
                  << (r.icc_quiescent_a ? num(*r.icc_quiescent_a * 1e3) : std::string("-"));
        std::cout << " verdict=" << (r.verdict ? to_string(r.verdict->verdict) : "-") << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"op-amp counterfeit screening toolkit"};
    app.require_subcommand(1);

    // simulate
    CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic measurement data");
    simulate->require_subcommand(1);

    ModelFlags bode_flags;
    double fmin = 10.0, fmax = 6e6;
    int points_per_decade = 20;
    std::string bode_out;
    CLI::App* sim_bode = simulate->add_subcommand("bode", "swept-sine frequency response");
    bode_flags.add_to(sim_bode);
    sim_bode->add_option("--fmin", fmin, "sweep start, Hz (default 10)");
    sim_bode->add_option("--fmax", fmax, "sweep end, Hz (default 6e6)");
    sim_bode->add_option("--points-per-decade", points_per_decade, "grid density (default 20)");
    sim_bode->add_option("-o,--output", bode_out, "sweep CSV path")->required();

    ModelFlags tr_flags;
    std::string stim_spec;
    int cycles = 8, samples_per_cycle = 256;
    double noise_vpp = 0.0;
    std::uint64_t seed = 1;
    std::string tr_out, tr_dump_input;
    CLI::App* sim_tr = simulate->add_subcommand("transient", "time-domain capture");
    tr_flags.add_to(sim_tr);
    sim_tr->add_option("--stim", stim_spec, "stimulus, sine:<freq_hz>:<vpp> or square:<freq_hz>:<vpp>")
        ->required();
    sim_tr->add_option("--cycles", cycles, "captured cycles (default 8)");
    sim_tr->add_option("--samples-per-cycle", samples_per_cycle, "sample density (default 256)");
    sim_tr->add_option("--noise-vpp", noise_vpp, "uniform output noise, V peak-peak (default 0)");
    sim_tr->add_option("--seed", seed, "noise seed (default 1)");
    sim_tr->add_option("-o,--output", tr_out, "waveform CSV path")->required();
    sim_tr->add_option("--dump-input", tr_dump_input, "also write the stimulus waveform CSV");

    // analyze
    CLI::App* analyze = app.add_subcommand("analyze", "extract signatures from captures");
    analyze->require_subcommand(1);

    double an_noise_gain = 0.0;
    std::string an_sweep_path;
    CLI::App* an_sweep = analyze->add_subcommand("sweep", "f3dB and GBWP from a sweep CSV");
    an_sweep->add_option("--noise-gain", an_noise_gain, "noise gain of the measured configuration")
        ->required();
    an_sweep->add_option("file", an_sweep_path, "sweep CSV")->required();

    std::string an_kind, an_wave_path;
    std::optional<double> an_freq;
    CLI::App* an_wave = analyze->add_subcommand("waveform", "slew / distortion / swing analysis");
    an_wave->add_option("--kind", an_kind, "slew|distortion|vom")
        ->required()
        ->check(CLI::IsMember({"slew", "distortion", "vom"}));
    an_wave->add_option("--freq", an_freq, "fundamental, Hz (distortion only)");
    an_wave->add_option("file", an_wave_path, "waveform CSV")->required();

    // screen
    CLI::App* screen = app.add_subcommand("screen", "supply-current screening");
    screen->require_subcommand(1);

    std::string fit_genuine, fit_counterfeit, fit_out;
    double usl_ma = 2.5;
    bool no_timestamp = false;
    CLI::App* sc_fit = screen->add_subcommand("fit", "fit thresholds from two populations");
    sc_fit->add_option("--genuine", fit_genuine, "genuine population CSV (icc_ma)")->required();
    sc_fit->add_option("--counterfeit", fit_counterfeit, "counterfeit population CSV (icc_ma)")
        ->required();
    sc_fit->add_option("--usl-ma", usl_ma, "datasheet upper limit, mA (default 2.5)");
    sc_fit->add_flag("--no-timestamp", no_timestamp, "omit the provenance timestamp");
    sc_fit->add_option("-o,--output", fit_out, "thresholds JSON path")->required();

    std::string cl_thresholds;
    std::optional<double> cl_icc_ma, cl_vdrop_mv, cl_icc_active_ma;
    double cl_min_delta_ma = 0.25;
    CLI::App* sc_classify = screen->add_subcommand("classify", "classify one measurement");
    sc_classify->add_option("--thresholds", cl_thresholds, "thresholds JSON")->required();
    sc_classify->add_option("--icc-ma", cl_icc_ma, "measured supply current, mA");
    sc_classify->add_option("--vdrop-mv", cl_vdrop_mv,
                            "voltage drop across a 1 ohm sense resistor, mV");
    sc_classify->add_option("--icc-active-ma", cl_icc_active_ma,
                            "supply current while amplifying, mA");
    sc_classify->add_option("--min-delta-ma", cl_min_delta_ma,
                            "minimum genuine-consistent current increase, mA (default 0.25)");

    // report
    std::string report_db;
    CLI::App* report = app.add_subcommand("report", "summarize a component database");
    report->add_option("--db", report_db, "component database (JSON lines)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (sim_bode->parsed())
            return run_simulate_bode(bode_flags, fmin, fmax, points_per_decade, bode_out);
        if (sim_tr->parsed())
            return run_simulate_transient(tr_flags, stim_spec, cycles, samples_per_cycle,
                                          noise_vpp, seed, tr_out, tr_dump_input);
        if (an_sweep->parsed()) return run_analyze_sweep(an_noise_gain, an_sweep_path);
        if (an_wave->parsed()) return run_analyze_waveform(an_kind, an_freq, an_wave_path);
        if (sc_fit->parsed())
            return run_screen_fit(fit_genuine, fit_counterfeit, usl_ma, no_timestamp, fit_out);
        if (sc_classify->parsed())
            return run_screen_classify(cl_thresholds, cl_icc_ma, cl_vdrop_mv, cl_icc_active_ma,
                                       cl_min_delta_ma);
        if (report->parsed()) return run_report(report_db);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
