#include "icscreen/screening.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "icscreen/kernels.hpp"

namespace icscreen {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

} // namespace

void validate(const PopulationStats& stats) {
    require(std::isfinite(stats.mean_a), "population mean must be finite");
    require(std::isfinite(stats.stddev_a) && stats.stddev_a >= 0.0,
            "population stddev must be >= 0");
    require(stats.n >= 2, "population needs at least 2 samples");
}

PopulationStats fit_population(std::span<const double> samples_a) {
    require(samples_a.size() >= 2, "population needs at least 2 samples");
    for (double v : samples_a) {
        require(std::isfinite(v), "population sample is not finite");
        require(v > 0.0, "population sample must be a positive current");
    }
    const double n = static_cast<double>(samples_a.size());
    const double mean = kernels::reduce_sum(samples_a) / n;
    const double ss = kernels::sum_sq_diff(samples_a, mean);
    return PopulationStats{mean, std::sqrt(ss / (n - 1.0)), samples_a.size()};
}

Separation separation_k(const PopulationStats& genuine, const PopulationStats& counterfeit) {
    validate(genuine);
    validate(counterfeit);
    const double sigma_sum = genuine.stddev_a + counterfeit.stddev_a;
    if (sigma_sum == 0.0) {
        if (genuine.mean_a == counterfeit.mean_a) return Separation{0.0, false};
        return Separation{0.0, true};
    }
    return Separation{std::fabs(genuine.mean_a - counterfeit.mean_a) / sigma_sum, false};
}

double compute_lsl(const PopulationStats& genuine, const PopulationStats& counterfeit) {
    validate(genuine);
    validate(counterfeit);
    require(genuine.mean_a > counterfeit.mean_a,
            "genuine population mean must exceed the counterfeit mean");
    const double sigma_sum = genuine.stddev_a + counterfeit.stddev_a;
    require(sigma_sum > 0.0, "at least one population must have nonzero spread");
    return (genuine.mean_a * counterfeit.stddev_a + counterfeit.mean_a * genuine.stddev_a) /
           sigma_sum;
}

double tail_ppm(double k) {
    require(std::isfinite(k) && k >= 0.0, "k must be >= 0");
    return 0.5 * std::erfc(k / std::sqrt(2.0)) * 1e6;
}

void validate(const ScreeningThresholds& thresholds) {
    require(std::isfinite(thresholds.lsl_a) && thresholds.lsl_a > 0.0, "LSL must be > 0");
    require(std::isfinite(thresholds.usl_a) && thresholds.usl_a > thresholds.lsl_a,
            "USL must exceed the LSL");
    require(std::isfinite(thresholds.k) && thresholds.k >= 0.0, "k must be >= 0");
    require(std::isfinite(thresholds.tail_ppm) && thresholds.tail_ppm >= 0.0,
            "tail_ppm must be >= 0");
}

ScreeningThresholds derive_thresholds(const PopulationStats& genuine,
                                      const PopulationStats& counterfeit, double usl_a) {
    const Separation sep = separation_k(genuine, counterfeit);
    require(!sep.infinite,
            "degenerate populations: both stddevs are zero (infinite separation)");
    ScreeningThresholds th;
    th.lsl_a = compute_lsl(genuine, counterfeit);
    th.usl_a = usl_a;
    th.k = sep.k;
    th.tail_ppm = tail_ppm(sep.k);
    validate(th);
    return th;
}

std::string_view to_string(IccVerdict verdict) {
    switch (verdict) {
        case IccVerdict::pass: return "pass";
        case IccVerdict::suspect_low: return "suspect_low";
        case IccVerdict::fail_high: return "fail_high";
    }
    return "unknown";
}

IccVerdict icc_verdict_from_string(std::string_view name) {
    if (name == "pass") return IccVerdict::pass;
    if (name == "suspect_low") return IccVerdict::suspect_low;
    if (name == "fail_high") return IccVerdict::fail_high;
    throw std::invalid_argument("unknown verdict name: " + std::string(name));
}

Verdict classify_icc(double icc_a, const ScreeningThresholds& thresholds) {
    validate(thresholds);
    require(std::isfinite(icc_a) && icc_a >= 0.0, "measured current must be finite and >= 0");
    IccVerdict v = IccVerdict::pass;
    if (icc_a < thresholds.lsl_a)
        v = IccVerdict::suspect_low;
    else if (icc_a > thresholds.usl_a)
        v = IccVerdict::fail_high;
    return Verdict{v, icc_a, thresholds};
}

bool delta_icc_test(double icc_quiescent_a, double icc_active_a, double min_delta_a) {
    require(std::isfinite(icc_quiescent_a) && icc_quiescent_a >= 0.0,
            "quiescent current must be >= 0");
    require(std::isfinite(icc_active_a) && icc_active_a >= 0.0, "active current must be >= 0");
    require(std::isfinite(min_delta_a), "min delta must be finite");
    return icc_active_a - icc_quiescent_a >= min_delta_a;
}

} // namespace icscreen
