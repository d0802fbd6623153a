#include "fairhc/kernels.hpp"

#if defined(FAIRHC_AVX2_KERNELS)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairhc::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double hmin(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_min_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_min_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double pairwise_abs_diff_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    const double* p = x.data();
    const __m256d sign = _mm256_set1_pd(-0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const __m256d xi = _mm256_set1_pd(p[i]);
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const __m256d d = _mm256_sub_pd(xi, _mm256_loadu_pd(p + j));
            acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
        }
        double row = hsum(acc);
        for (; j < n; ++j) row += std::fabs(p[i] - p[j]);
        total += row;
    }
    return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
        _mm256_storeu_pd(y.data() + i, r);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double min_value(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_min_pd(acc, _mm256_loadu_pd(x.data() + i));
    double m = hmin(acc);
    for (; i < n; ++i) m = std::min(m, x[i]);
    return m;
}

void branch_flows(const BranchInputs& in, const BranchOutputs& out) {
    const std::size_t n = in.g.size();
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) {
        const __m256d vm = _mm256_loadu_pd(in.v_from.data() + l);
        const __m256d vn = _mm256_loadu_pd(in.v_to.data() + l);
        const __m256d c = _mm256_loadu_pd(in.cos_delta.data() + l);
        const __m256d s = _mm256_loadu_pd(in.sin_delta.data() + l);
        const __m256d g = _mm256_loadu_pd(in.g.data() + l);
        const __m256d b = _mm256_loadu_pd(in.b.data() + l);
        const __m256d vv = _mm256_mul_pd(vm, vn);
        const __m256d vm2 = _mm256_mul_pd(vm, vm);
        const __m256d vn2 = _mm256_mul_pd(vn, vn);
        const __m256d gc = _mm256_mul_pd(g, c);
        const __m256d bs = _mm256_mul_pd(b, s);
        const __m256d gs = _mm256_mul_pd(g, s);
        const __m256d bc = _mm256_mul_pd(b, c);
        // p_from = g vm^2 - vv (gc + bs)
        _mm256_storeu_pd(out.p_from.data() + l,
                         _mm256_fnmadd_pd(vv, _mm256_add_pd(gc, bs), _mm256_mul_pd(g, vm2)));
        // q_from = -b vm^2 - vv (gs - bc)
        _mm256_storeu_pd(out.q_from.data() + l,
                         _mm256_fnmadd_pd(vv, _mm256_sub_pd(gs, bc), _mm256_sub_pd(_mm256_setzero_pd(),
                                                                                    _mm256_mul_pd(b, vm2))));
        // p_to = g vn^2 - vv (gc - bs)
        _mm256_storeu_pd(out.p_to.data() + l,
                         _mm256_fnmadd_pd(vv, _mm256_sub_pd(gc, bs), _mm256_mul_pd(g, vn2)));
        // q_to = -b vn^2 + vv (gs + bc)
        _mm256_storeu_pd(out.q_to.data() + l,
                         _mm256_fmadd_pd(vv, _mm256_add_pd(gs, bc), _mm256_sub_pd(_mm256_setzero_pd(),
                                                                                   _mm256_mul_pd(b, vn2))));
    }
    for (; l < n; ++l) {
        const double vm = in.v_from[l];
        const double vn = in.v_to[l];
        const double c = in.cos_delta[l];
        const double s = in.sin_delta[l];
        const double g = in.g[l];
        const double b = in.b[l];
        const double vv = vm * vn;
        out.p_from[l] = g * vm * vm - vv * (g * c + b * s);
        out.q_from[l] = -b * vm * vm - vv * (g * s - b * c);
        out.p_to[l] = g * vn * vn - vv * (g * c - b * s);
        out.q_to[l] = -b * vn * vn + vv * (g * s + b * c);
    }
}

constexpr KernelTable kAvx2{"avx2", pairwise_abs_diff_sum, dot, axpy, min_value, branch_flows};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace fairhc::kernels

#else

namespace fairhc::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace fairhc::kernels::detail

#endif
