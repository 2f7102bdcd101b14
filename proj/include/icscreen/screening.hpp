#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Supply-current screening: population statistics for genuine and
// counterfeit parts, the separation statistic k = |mu1 - mu0| / (s1 + s0),
// the sigma-equidistant lower-side limit derived from it, the Gaussian tail
// probability of a misclassified part, and the interval verdict.

namespace icscreen {

struct PopulationStats {
    double mean_a;    ///< sample mean, A
    double stddev_a;  ///< Bessel-corrected sample standard deviation, A
    std::size_t n;    ///< sample count, >= 2
};

void validate(const PopulationStats& stats);

/// Sample mean and (n-1)-normalized standard deviation. All samples must be
/// positive and finite; at least two are required.
PopulationStats fit_population(std::span<const double> samples_a);

struct Separation {
    double k;       ///< meaningful only when !infinite
    bool infinite;  ///< both stddevs zero with distinct means
};

/// Separation statistic between two populations. When both standard
/// deviations are zero the separation is flagged infinite instead of
/// dividing by zero.
Separation separation_k(const PopulationStats& genuine, const PopulationStats& counterfeit);

/// The point exactly k standard deviations from both means:
/// (mu_gen*sigma_coun + mu_coun*sigma_gen) / (sigma_gen + sigma_coun).
/// Requires mu_gen > mu_coun and sigma_gen + sigma_coun > 0.
double compute_lsl(const PopulationStats& genuine, const PopulationStats& counterfeit);

/// One-sided standard normal tail probability Phi(-k) in parts per million.
double tail_ppm(double k);

struct ScreeningThresholds {
    double lsl_a;
    double usl_a;
    double k;
    double tail_ppm;
};

void validate(const ScreeningThresholds& thresholds);

/// Builds thresholds from two fitted populations and a datasheet upper
/// limit. Throws if the populations are degenerate (infinite separation).
ScreeningThresholds derive_thresholds(const PopulationStats& genuine,
                                      const PopulationStats& counterfeit, double usl_a);

enum class IccVerdict { pass, suspect_low, fail_high };

std::string_view to_string(IccVerdict verdict);
/// Throws std::invalid_argument for an unknown name.
IccVerdict icc_verdict_from_string(std::string_view name);

struct Verdict {
    IccVerdict verdict;
    double icc_a;
    ScreeningThresholds thresholds;
};

/// pass iff lsl <= icc <= usl (boundaries inclusive); below the LSL is
/// counterfeit-consistent, above the USL is out of spec.
Verdict classify_icc(double icc_a, const ScreeningThresholds& thresholds);

inline constexpr double kDefaultMinDeltaIccA = 0.25e-3;

/// True (genuine-consistent) iff the supply current rises by at least
/// `min_delta_a` while amplifying.
bool delta_icc_test(double icc_quiescent_a, double icc_active_a,
                    double min_delta_a = kDefaultMinDeltaIccA);

} // namespace icscreen
