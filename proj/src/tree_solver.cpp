#include "fairhc/tree_solver.hpp"

#include <cmath>

#include "fairhc/errors.hpp"

namespace fairhc {
namespace {

Block2 mul(const Block2& x, const Block2& y) {
    return Block2{{x.a[0] * y.a[0] + x.a[1] * y.a[2], x.a[0] * y.a[1] + x.a[1] * y.a[3],
                   x.a[2] * y.a[0] + x.a[3] * y.a[2], x.a[2] * y.a[1] + x.a[3] * y.a[3]}};
}

void mul_sub(const Block2& m, const double* v, double* out) {
    out[0] -= m.a[0] * v[0] + m.a[1] * v[1];
    out[1] -= m.a[2] * v[0] + m.a[3] * v[1];
}

void apply(const Block2& m, double* v) {
    const double x0 = m.a[0] * v[0] + m.a[1] * v[1];
    const double x1 = m.a[2] * v[0] + m.a[3] * v[1];
    v[0] = x0;
    v[1] = x1;
}

Block2 inverse(const Block2& m) {
    const double det = m.a[0] * m.a[3] - m.a[1] * m.a[2];
    const double scale = std::fabs(m.a[0] * m.a[3]) + std::fabs(m.a[1] * m.a[2]);
    if (!std::isfinite(det) || std::fabs(det) <= 1e-14 * scale || scale == 0.0)
        throw SingularJacobian("singular pivot block in tree factorization");
    const double inv = 1.0 / det;
    return Block2{{m.a[3] * inv, -m.a[1] * inv, -m.a[2] * inv, m.a[0] * inv}};
}

}  // namespace

TreeBlockSystem::TreeBlockSystem(std::span<const std::size_t> order, std::span<const std::size_t> parent)
    : order_(order.begin(), order.end()),
      parent_(parent.begin(), parent.end()),
      root_(order.empty() ? 0 : order.front()),
      diag_(parent.size()),
      up_(parent.size()),
      down_(parent.size()),
      pivot_inv_(parent.size()) {}

void TreeBlockSystem::clear() {
    for (auto* blocks : {&diag_, &up_, &down_}) {
        for (auto& b : *blocks) b = Block2{};
    }
}

void TreeBlockSystem::factor() {
    std::vector<Block2> schur = diag_;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        const std::size_t i = *it;
        if (i == root_) continue;
        pivot_inv_[i] = inverse(schur[i]);
        const std::size_t p = parent_[i];
        if (p == root_) continue;
        const Block2 update = mul(mul(down_[i], pivot_inv_[i]), up_[i]);
        for (std::size_t k = 0; k < 4; ++k) schur[p].a[k] -= update.a[k];
    }
}

void TreeBlockSystem::solve(std::span<double> rhs) const {
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        const std::size_t i = *it;
        const std::size_t p = parent_[i];
        if (i == root_ || p == root_) continue;
        double y[2] = {rhs[2 * i], rhs[2 * i + 1]};
        apply(pivot_inv_[i], y);
        mul_sub(down_[i], y, &rhs[2 * p]);
    }
    rhs[2 * root_] = 0.0;
    rhs[2 * root_ + 1] = 0.0;
    for (std::size_t i : order_) {
        if (i == root_) continue;
        const std::size_t p = parent_[i];
        if (p != root_) mul_sub(up_[i], &rhs[2 * p], &rhs[2 * i]);
        apply(pivot_inv_[i], &rhs[2 * i]);
    }
}

void TreeBlockSystem::solve_transposed(std::span<double> rhs) const {
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        const std::size_t i = *it;
        const std::size_t p = parent_[i];
        if (i == root_ || p == root_) continue;
        double y[2] = {rhs[2 * i], rhs[2 * i + 1]};
        apply(pivot_inv_[i].transposed(), y);
        mul_sub(up_[i].transposed(), y, &rhs[2 * p]);
    }
    rhs[2 * root_] = 0.0;
    rhs[2 * root_ + 1] = 0.0;
    for (std::size_t i : order_) {
        if (i == root_) continue;
        const std::size_t p = parent_[i];
        if (p != root_) mul_sub(down_[i].transposed(), &rhs[2 * p], &rhs[2 * i]);
        apply(pivot_inv_[i].transposed(), &rhs[2 * i]);
    }
}

}  // namespace fairhc
