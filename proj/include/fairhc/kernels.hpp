#pragma once

// Data-parallel inner loops with a scalar reference implementation and an AVX2
// variant. The variant is chosen once at startup from the CPU features; setting
// FAIRHC_SIMD=scalar in the environment pins the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace fairhc::kernels {

/// Per-line quantities in structure-of-arrays layout. All spans share one length.
struct BranchInputs {
    std::span<const double> v_from;
    std::span<const double> v_to;
    std::span<const double> cos_delta;  // cos(theta_from - theta_to)
    std::span<const double> sin_delta;  // sin(theta_from - theta_to)
    std::span<const double> g;
    std::span<const double> b;
};

struct BranchOutputs {
    std::span<double> p_from;  // sending-end flows, from -> to
    std::span<double> q_from;
    std::span<double> p_to;  // sending-end flows, to -> from
    std::span<double> q_to;
};

struct KernelTable {
    std::string_view name;
    /// Sum of |x_i - x_j| over all ordered pairs (i, j).
    double (*pairwise_abs_diff_sum)(std::span<const double> x);
    double (*dot)(std::span<const double> a, std::span<const double> b);
    /// y += alpha * x
    void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
    /// Smallest element; +inf for an empty span.
    double (*min_value)(std::span<const double> x);
    void (*branch_flows)(const BranchInputs& in, const BranchOutputs& out);
};

[[nodiscard]] const KernelTable& scalar();
/// nullptr when the build or the CPU lacks AVX2+FMA.
[[nodiscard]] const KernelTable* avx2();
/// The table selected for this process.
[[nodiscard]] const KernelTable& active();

}  // namespace fairhc::kernels
