#pragma once

// Hosting-capacity solvers: a reduced-space augmented-Lagrangian method over the
// DG injections (the power flow is embedded as an implicit map), bisection for
// the egalitarian policy, and an exhaustive grid oracle for small feeders.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairhc/formulation.hpp"

namespace fairhc {

enum class SolveStatus { optimal, infeasible, max_iter, failed };

[[nodiscard]] std::string_view to_string(SolveStatus status);

struct SolverOptions {
    double tol = 1e-6;               // scaled constraint violation for convergence
    double optimality_tol = 1e-5;    // projected-gradient norm of the Lagrangian
    double feasibility_tol = 1e-6;   // raw residuals must be >= -feasibility_tol
    int max_outer = 50;
    int max_inner = 200;
    int starts = 3;  // first three are deterministic; extra starts are seeded
    std::uint64_t seed = 0;
    int grid_steps = 201;  // oracle only
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double violation_shrink = 4.0;  // grow the penalty unless violation shrinks by this factor
    double dg_power_factor = 1.0;   // < 1 makes DG absorb reactive power at that power factor
};

/// DG reactive power per unit of active power implied by the power factor setting.
[[nodiscard]] double reactive_ratio(const SolverOptions& options);

struct IterationCounts {
    int outer = 0;
    int inner = 0;
};

struct HCSolution {
    std::vector<double> allocation;  // kW per load
    double hc_total = 0.0;           // kW
    FairnessPolicy policy;
    SolveStatus status = SolveStatus::failed;
    double kkt_residual = 0.0;
    std::vector<std::string> binding;
    IterationCounts iterations;
    std::optional<double> disparity;  // kW, bargaining only
    double objective = 0.0;           // policy objective in kW
    std::vector<double> allocation_pu;
};

/// Dispatches on the policy: egalitarian (and bargaining with k = 0) use
/// bisection, a collapsed box is returned directly, everything else goes to
/// the augmented-Lagrangian solver. Throws Infeasible when p = lower already
/// violates the network limits.
[[nodiscard]] HCSolution solve_hc(const HCProblem& problem, const SolverOptions& options = {});

/// Largest uniform per-load injection in [0, dg_cap] whose power flow stays
/// within every limit. Throws Infeasible when zero injection is infeasible.
[[nodiscard]] HCSolution solve_egalitarian_bisection(const NormalizedFeeder& feeder,
                                                     const SolverOptions& options = {});

[[nodiscard]] HCSolution solve_nlp_al(const HCProblem& problem, const SolverOptions& options = {});

/// Exhaustive search of a uniform grid over the box (grid_steps points per
/// load), returning the best feasible grid point for the problem objective.
/// Points are visited in decreasing objective order so only points that
/// could beat the incumbent are power-flow checked. Throws TooManyLoads above
/// three free loads and Infeasible when no grid point is feasible.
[[nodiscard]] HCSolution brute_force_oracle(const HCProblem& problem, int grid_steps,
                                            const SolverOptions& options = {});

/// True when the power flow converges at p and every residual >= -tol.
[[nodiscard]] bool is_feasible(const NormalizedFeeder& feeder, std::span<const double> p_pu, double tol,
                               double q_per_p = 0.0);

/// The utilitarian and egalitarian solutions a feeder's bounded policies and
/// KPIs are defined against.
struct ReferenceSolutions {
    HCSolution utilitarian;
    HCSolution egalitarian;
    References refs;
};

[[nodiscard]] ReferenceSolutions solve_references(const std::shared_ptr<const NormalizedFeeder>& feeder,
                                                  const SolverOptions& options = {});

/// Builds and solves one policy, computing the references when the policy needs them.
[[nodiscard]] HCSolution solve_policy(const std::shared_ptr<const NormalizedFeeder>& feeder,
                                      const FairnessPolicy& policy, const SolverOptions& options = {},
                                      const std::optional<References>& refs = std::nullopt);

[[nodiscard]] std::string solution_to_json(const HCSolution& solution, const NormalizedFeeder& feeder);

}  // namespace fairhc
