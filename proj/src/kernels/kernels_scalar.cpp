#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string_view>

#include "fairhc/kernels.hpp"

namespace fairhc::kernels {

namespace detail {
const KernelTable* avx2_table();
}

namespace {

double pairwise_abs_diff_sum(std::span<const double> x) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) row += std::fabs(x[i] - x[j]);
        total += row;
    }
    return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double min_value(std::span<const double> x) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : x) m = std::min(m, v);
    return m;
}

void branch_flows(const BranchInputs& in, const BranchOutputs& out) {
    for (std::size_t l = 0; l < in.g.size(); ++l) {
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

constexpr KernelTable kScalar{"scalar", pairwise_abs_diff_sum, dot, axpy, min_value, branch_flows};

const KernelTable& select() {
    if (const char* env = std::getenv("FAIRHC_SIMD"); env != nullptr && std::string_view(env) == "scalar")
        return kScalar;
    if (const KernelTable* t = avx2()) return *t;
    return kScalar;
}

}  // namespace

const KernelTable& scalar() { return kScalar; }

const KernelTable* avx2() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace fairhc::kernels
