#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fairhc {

/// Row-major 2x2 block.
struct Block2 {
    std::array<double, 4> a{};

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(2 * r + c)]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(2 * r + c)]; }

    [[nodiscard]] Block2 transposed() const { return Block2{{a[0], a[2], a[1], a[3]}}; }
};

/// Direct solver for linear systems whose 2x2 block sparsity follows a tree.
///
/// Block row/column i couples only to itself and to its tree neighbours. The
/// root (the slack bus) carries no unknowns. Eliminating leaves first produces
/// no fill-in, so factor and solve are both linear in the number of nodes.
/// The same factorization serves solves with the transposed matrix.
class TreeBlockSystem {
  public:
    /// `order` lists nodes parents-first starting with the root; `parent[root]`
    /// is ignored.
    TreeBlockSystem(std::span<const std::size_t> order, std::span<const std::size_t> parent);

    /// Diagonal block of node i.
    Block2& diag(std::size_t i) { return diag_[i]; }
    /// Block at (row i, column parent(i)).
    Block2& to_parent(std::size_t i) { return up_[i]; }
    /// Block at (row parent(i), column i).
    Block2& from_parent(std::size_t i) { return down_[i]; }

    void clear();
    /// Throws SingularJacobian when a pivot block is singular.
    void factor();

    /// Solves A x = rhs in place. rhs has two entries per node; root entries are ignored and zeroed.
    void solve(std::span<double> rhs) const;
    /// Solves A^T x = rhs in place.
    void solve_transposed(std::span<double> rhs) const;

  private:
    std::vector<std::size_t> order_;
    std::vector<std::size_t> parent_;
    std::size_t root_;
    std::vector<Block2> diag_;
    std::vector<Block2> up_;
    std::vector<Block2> down_;
    std::vector<Block2> pivot_inv_;
};

}  // namespace fairhc
