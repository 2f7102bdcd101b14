// AVX2+FMA variants of the reduction kernels. This translation unit is
// compiled with -mavx2 -mfma; callers must check cpu_supports_avx2() first,
// which the dispatcher in kernels.cpp does.

#include "icscreen/kernels.hpp"

#if defined(ICSCREEN_HAVE_AVX2)

#include <immintrin.h>

#include <cassert>

namespace icscreen::kernels::avx2 {

namespace {

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d sum2 = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(sum2, sum2);
    return _mm_cvtsd_f64(_mm_add_sd(sum2, swapped));
}

} // namespace

double reduce_sum(std::span<const double> x) noexcept {
    const double* p = x.data();
    const std::size_t n = x.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(p + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(p + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(p + i));
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += p[i];
    return acc;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    assert(a.size() == b.size());
    const double* pa = a.data();
    const double* pb = b.data();
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4), _mm256_loadu_pd(pb + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += pa[i] * pb[i];
    return acc;
}

double sum_sq_diff(std::span<const double> x, double ref) noexcept {
    const double* p = x.data();
    const std::size_t n = x.size();
    const __m256d vref = _mm256_set1_pd(ref);
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(p + i), vref);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(p + i + 4), vref);
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), vref);
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = p[i] - ref;
        acc += d * d;
    }
    return acc;
}

MinMax reduce_min_max(std::span<const double> x) noexcept {
    assert(!x.empty());
    const double* p = x.data();
    const std::size_t n = x.size();
    if (n < 4) return scalar::reduce_min_max(x);
    __m256d vmin = _mm256_loadu_pd(p);
    __m256d vmax = vmin;
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(p + i);
        vmin = _mm256_min_pd(vmin, v);
        vmax = _mm256_max_pd(vmax, v);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmin);
    double mn = lanes[0];
    for (int k = 1; k < 4; ++k) mn = lanes[k] < mn ? lanes[k] : mn;
    _mm256_store_pd(lanes, vmax);
    double mx = lanes[0];
    for (int k = 1; k < 4; ++k) mx = lanes[k] > mx ? lanes[k] : mx;
    for (; i < n; ++i) {
        if (p[i] < mn) mn = p[i];
        if (p[i] > mx) mx = p[i];
    }
    return MinMax{mn, mx};
}

} // namespace icscreen::kernels::avx2

#endif // ICSCREEN_HAVE_AVX2
