#pragma once

// Polar-form AC power flow for radial feeders, the operating-limit residuals
// evaluated on a solved state, and their adjoint sensitivities with respect to
// the DG active-power injections.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairhc/netmodel.hpp"

namespace fairhc {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // infinity norm of the nodal mismatch, pu
    int max_iterations = 50;
};

/// Converged operating point. Line flows are sending-end values; `p_from` is
/// measured at the line's from bus toward its to bus, `p_to` the opposite end.
struct PowerFlowState {
    std::vector<double> v;      // pu
    std::vector<double> theta;  // rad
    std::vector<double> p_from;
    std::vector<double> q_from;
    std::vector<double> p_to;
    std::vector<double> q_to;
    double p_slack = 0.0;  // import from the upstream grid, pu
    double q_slack = 0.0;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Limit-minus-value margins; every entry >= 0 for a state within limits.
struct ConstraintResiduals {
    std::vector<double> v_upper;          // v_max - V, per bus
    std::vector<double> v_lower;          // V - v_min, per bus
    std::vector<double> thermal;          // S_rated^2 - (P^2 + Q^2) at the from end, per line
    std::vector<double> thermal_reverse;  // same at the to end
    double slack_p[2] = {0.0, 0.0};       // p_max - P_slack, P_slack + p_max
    double slack_q[2] = {0.0, 0.0};
    std::vector<double> angle_upper;  // dtheta_max - (theta_from - theta_to), per line
    std::vector<double> angle_lower;  // (theta_from - theta_to) - dtheta_min, per line

    /// Concatenation in the order of ResidualLayout.
    [[nodiscard]] std::vector<double> flatten() const;
    [[nodiscard]] double min_value() const;
};

/// Positions of each residual group inside the flattened vector.
struct ResidualLayout {
    std::size_t n_buses;
    std::size_t n_lines;

    [[nodiscard]] std::size_t v_upper() const { return 0; }
    [[nodiscard]] std::size_t v_lower() const { return n_buses; }
    [[nodiscard]] std::size_t thermal() const { return 2 * n_buses; }
    [[nodiscard]] std::size_t thermal_reverse() const { return 2 * n_buses + n_lines; }
    [[nodiscard]] std::size_t slack_p() const { return 2 * n_buses + 2 * n_lines; }
    [[nodiscard]] std::size_t slack_q() const { return slack_p() + 2; }
    [[nodiscard]] std::size_t angle_upper() const { return slack_p() + 4; }
    [[nodiscard]] std::size_t angle_lower() const { return angle_upper() + n_lines; }
    [[nodiscard]] std::size_t size() const { return angle_lower() + n_lines; }

    /// Human-readable id such as "v_upper:b7" or "thermal:b2-b3".
    [[nodiscard]] std::string label(const NormalizedFeeder& feeder, std::size_t index) const;
    /// Natural magnitude of each residual (1 for voltages and angles, S_rated^2 for
    /// thermal margins, the exchange limit for slack margins).
    [[nodiscard]] std::vector<double> scales(const NormalizedFeeder& feeder) const;
};

[[nodiscard]] inline ResidualLayout residual_layout(const NormalizedFeeder& feeder) {
    return {feeder.n_buses(), feeder.n_lines()};
}

/// Newton-Raphson from a flat start. `dg_p` and `dg_q` hold per-load DG
/// injections in pu (dg_q may be empty for unity power factor).
/// Throws NonConvergence or SingularJacobian.
[[nodiscard]] PowerFlowState solve_power_flow(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                              std::span<const double> dg_q = {},
                                              const PowerFlowOptions& options = {});

[[nodiscard]] ConstraintResiduals constraint_residuals(const PowerFlowState& state, const NormalizedFeeder& feeder);

/// Reusable power-flow + adjoint evaluator bound to one feeder. solve() runs
/// Newton-Raphson for an injection vector; gradient() then returns
/// d(weights . residuals)/d(dg_p) at that state with one transposed solve.
/// The reactive injection follows the active one as q = q_per_p * p.
/// Not thread-safe; use one instance per thread.
class SensitivityModel {
  public:
    explicit SensitivityModel(const NormalizedFeeder& feeder, double q_per_p = 0.0,
                              const PowerFlowOptions& options = {});
    ~SensitivityModel();
    SensitivityModel(SensitivityModel&&) noexcept;
    SensitivityModel& operator=(SensitivityModel&&) noexcept;

    /// Throws NonConvergence or SingularJacobian.
    const PowerFlowState& solve(std::span<const double> dg_p);
    [[nodiscard]] const PowerFlowState& state() const;
    [[nodiscard]] const ConstraintResiduals& residuals() const;
    [[nodiscard]] std::vector<double> gradient(std::span<const double> weights);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Power flow, residuals and the gradient of weights . residuals with respect
/// to the active injections, from a single Newton solve plus one transposed
/// solve. The reactive injection follows the active one as q = q_per_p * p.
struct SensitivityResult {
    PowerFlowState state;
    ConstraintResiduals residuals;
    std::vector<double> gradient;  // per load
};

[[nodiscard]] SensitivityResult evaluate_with_gradient(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                                       std::span<const double> weights, double q_per_p = 0.0,
                                                       const PowerFlowOptions& options = {});

/// d(weights . residuals)/d(dg_p) at the converged state for dg_p.
[[nodiscard]] std::vector<double> adjoint_gradient(const NormalizedFeeder& feeder, std::span<const double> dg_p,
                                                   std::span<const double> weights, double q_per_p = 0.0,
                                                   const PowerFlowOptions& options = {});

/// Smallest residual at dg_p, or -inf when the power flow fails.
[[nodiscard]] double min_residual(const NormalizedFeeder& feeder, std::span<const double> dg_p, double q_per_p = 0.0);

/// JSON diagnostic dump of a state (bus ids, line ends, flows, residual summary).
[[nodiscard]] std::string state_to_json(const PowerFlowState& state, const NormalizedFeeder& feeder);

}  // namespace fairhc
