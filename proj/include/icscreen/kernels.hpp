#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel reduction kernels used by the waveform analysis paths.
// A scalar reference implementation always exists; on x86-64 an AVX2+FMA
// variant is selected at runtime when the CPU supports it. The two
// implementations are equivalence-tested against each other.
//
// Set ICSCREEN_KERNELS=scalar (or avx2) in the environment to force a
// backend, e.g. when chasing a numerical discrepancy.

namespace icscreen::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend() noexcept;
/// Returns false (and leaves the dispatch unchanged) if the requested
/// backend is not usable on this host.
bool set_backend(Backend b) noexcept;
std::string_view backend_name(Backend b) noexcept;
bool cpu_supports_avx2() noexcept;

/// Sum of all elements.
double reduce_sum(std::span<const double> x) noexcept;

/// Inner product. Both spans must have the same length.
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// Sum of squared deviations from `ref`.
double sum_sq_diff(std::span<const double> x, double ref) noexcept;

struct MinMax {
    double min;
    double max;
};

/// Minimum and maximum of a non-empty span.
MinMax reduce_min_max(std::span<const double> x) noexcept;

// Scalar reference kernels, callable directly by the equivalence tests.
namespace scalar {
double reduce_sum(std::span<const double> x) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double sum_sq_diff(std::span<const double> x, double ref) noexcept;
MinMax reduce_min_max(std::span<const double> x) noexcept;
} // namespace scalar

#if defined(ICSCREEN_HAVE_AVX2)
namespace avx2 {
double reduce_sum(std::span<const double> x) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double sum_sq_diff(std::span<const double> x, double ref) noexcept;
MinMax reduce_min_max(std::span<const double> x) noexcept;
} // namespace avx2
#endif

/// Fills out[i] = amplitude * sin(theta0 + i * dtheta).
/// Rotation recurrence with a periodic exact resync; the recurrence is
/// sequential, so this kernel is scalar on every backend.
void fill_sine(std::span<double> out, double theta0, double dtheta, double amplitude) noexcept;

/// Fills sin_out[i] = sin(theta0 + i * dtheta) and cos_out[i] likewise.
/// Spans must have the same length.
void fill_sine_cosine(std::span<double> sin_out, std::span<double> cos_out, double theta0,
                      double dtheta) noexcept;

} // namespace icscreen::kernels
