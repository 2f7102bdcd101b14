#include "icscreen/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string_view>

namespace icscreen::kernels {

namespace scalar {

double reduce_sum(std::span<const double> x) noexcept {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum_sq_diff(std::span<const double> x, double ref) noexcept {
    double acc = 0.0;
    for (double v : x) {
        const double d = v - ref;
        acc += d * d;
    }
    return acc;
}

MinMax reduce_min_max(std::span<const double> x) noexcept {
    assert(!x.empty());
    MinMax mm{x[0], x[0]};
    for (double v : x) {
        if (v < mm.min) mm.min = v;
        if (v > mm.max) mm.max = v;
    }
    return mm;
}

} // namespace scalar

bool cpu_supports_avx2() noexcept {
#if defined(ICSCREEN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend pick_initial_backend() noexcept {
    if (const char* env = std::getenv("ICSCREEN_KERNELS")) {
        const std::string_view want(env);
        if (want == "scalar") return Backend::scalar;
        if (want == "avx2" && cpu_supports_avx2()) return Backend::avx2;
        // Unknown or unusable request falls through to auto-detection.
    }
    return cpu_supports_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& backend_slot() noexcept {
    static std::atomic<Backend> slot{pick_initial_backend()};
    return slot;
}

} // namespace

Backend active_backend() noexcept { return backend_slot().load(std::memory_order_relaxed); }

bool set_backend(Backend b) noexcept {
    if (b == Backend::avx2 && !cpu_supports_avx2()) return false;
    backend_slot().store(b, std::memory_order_relaxed);
    return true;
}

std::string_view backend_name(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

double reduce_sum(std::span<const double> x) noexcept {
#if defined(ICSCREEN_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::reduce_sum(x);
#endif
    return scalar::reduce_sum(x);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
#if defined(ICSCREEN_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::dot(a, b);
#endif
    return scalar::dot(a, b);
}

double sum_sq_diff(std::span<const double> x, double ref) noexcept {
#if defined(ICSCREEN_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::sum_sq_diff(x, ref);
#endif
    return scalar::sum_sq_diff(x, ref);
}

MinMax reduce_min_max(std::span<const double> x) noexcept {
#if defined(ICSCREEN_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::reduce_min_max(x);
#endif
    return scalar::reduce_min_max(x);
}

// Resync the phase recurrence from std::sin/std::cos every block so the
// rounding drift stays below ~n_block * eps regardless of span length.
namespace {
constexpr std::size_t kResyncBlock = 1024;
}

void fill_sine(std::span<double> out, double theta0, double dtheta, double amplitude) noexcept {
    const std::size_t n = out.size();
    const double step_s = std::sin(dtheta);
    const double step_c = std::cos(dtheta);
    for (std::size_t block = 0; block < n; block += kResyncBlock) {
        const double theta = theta0 + static_cast<double>(block) * dtheta;
        double s = std::sin(theta);
        double c = std::cos(theta);
        const std::size_t end = std::min(n, block + kResyncBlock);
        for (std::size_t i = block; i < end; ++i) {
            out[i] = amplitude * s;
            const double ns = s * step_c + c * step_s;
            c = c * step_c - s * step_s;
            s = ns;
        }
    }
}

void fill_sine_cosine(std::span<double> sin_out, std::span<double> cos_out, double theta0,
                      double dtheta) noexcept {
    assert(sin_out.size() == cos_out.size());
    const std::size_t n = sin_out.size();
    const double step_s = std::sin(dtheta);
    const double step_c = std::cos(dtheta);
    for (std::size_t block = 0; block < n; block += kResyncBlock) {
        const double theta = theta0 + static_cast<double>(block) * dtheta;
        double s = std::sin(theta);
        double c = std::cos(theta);
        const std::size_t end = std::min(n, block + kResyncBlock);
        for (std::size_t i = block; i < end; ++i) {
            sin_out[i] = s;
            cos_out[i] = c;
            const double ns = s * step_c + c * step_s;
            c = c * step_c - s * step_s;
            s = ns;
        }
    }
}

} // namespace icscreen::kernels
