#pragma once

// Fairness policies and their translation into a hosting-capacity problem:
// per-load DG bounds, the egalitarian tie, and the objective.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairhc/netmodel.hpp"

namespace fairhc {

struct Utilitarian {};
struct Egalitarian {};
/// Per-load DG boxed between alpha * P_egal and P_egal + beta * (max P_uti - P_egal).
struct Bounded {
    double alpha = 0.0;
    double beta = 1.0;
};
/// Maximize k * sum(p) - (1 - k) * max_d |p_d - mean(p)|.
struct Bargaining {
    double k = 1.0;
};

using FairnessPolicy = std::variant<Utilitarian, Egalitarian, Bounded, Bargaining>;

/// Grammar: "utilitarian" | "egalitarian" | "bounded:alpha=A,beta=B" | "bargaining:k=K".
/// Throws ParameterOutOfRange or InputError.
[[nodiscard]] FairnessPolicy parse_policy(std::string_view text);
[[nodiscard]] std::string to_string(const FairnessPolicy& policy);
[[nodiscard]] std::string_view policy_name(const FairnessPolicy& policy);
/// Throws ParameterOutOfRange unless every parameter lies in [0, 1].
void validate(const FairnessPolicy& policy);

/// Solutions the bounded policy is defined relative to, in pu.
struct References {
    double p_egal = 0.0;                // uniform per-load egalitarian injection
    std::vector<double> uti_allocation;  // one utilitarian optimum
};

enum class ObjectiveKind { sum, bargaining };

struct HCProblem {
    std::shared_ptr<const NormalizedFeeder> feeder;
    FairnessPolicy policy;
    std::vector<double> lower;  // pu per load
    std::vector<double> upper;  // pu per load
    bool tie = false;           // all loads share one injection value
    ObjectiveKind objective = ObjectiveKind::sum;
    double k = 1.0;  // bargaining efficiency weight
    std::optional<double> reference_egal;
    std::vector<double> reference_uti;

    [[nodiscard]] std::size_t n_loads() const noexcept { return lower.size(); }
};

[[nodiscard]] HCProblem build_problem(std::shared_ptr<const NormalizedFeeder> feeder, const FairnessPolicy& policy,
                                      const std::optional<References>& refs = std::nullopt);

/// max_d |p_d - mean(p)|
[[nodiscard]] double disparity(std::span<const double> p);
/// The policy objective at p, taking the disparity variable at its tightest value.
[[nodiscard]] double objective_value(const HCProblem& problem, std::span<const double> p);
/// Box (and tie, when set) membership within `tol`.
[[nodiscard]] bool within_bounds(const HCProblem& problem, std::span<const double> p, double tol = 1e-12);

}  // namespace fairhc
