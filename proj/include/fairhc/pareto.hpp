#pragma once

// Parameter sweeps producing PoF-Gini frontiers, nondominated filtering and
// knee-point selection.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairhc/solver.hpp"

namespace fairhc {

enum class Family { bounded_lower, bounded_upper, bargaining, endpoint_uti, endpoint_egal };

[[nodiscard]] std::string_view to_string(Family family);
/// Throws InputError for an unknown family name.
[[nodiscard]] Family parse_family(std::string_view text);

struct ParetoPoint {
    Family family = Family::bargaining;
    double param = 0.0;  // alpha, beta or k; 1 for the utilitarian endpoint, 0 for the egalitarian one
    double hc_kw = 0.0;
    double pof = 0.0;
    double gini = 0.0;
    SolveStatus status = SolveStatus::failed;
};

struct Frontier {
    std::string feeder_id;
    std::vector<ParetoPoint> points;  // sorted by gini, failed points last
    HCSolution uti_ref;
    HCSolution egal_ref;
};

/// bounded_lower sweeps Bounded(alpha, 1), bounded_upper sweeps Bounded(0, beta),
/// bargaining sweeps k; each over `steps` evenly spaced values in [0, 1], plus
/// both endpoints. Per-point solver failures are kept with their status.
/// `jobs` > 1 solves parameter values on that many threads; the result does not
/// depend on it. Throws Infeasible when the baseline is infeasible.
[[nodiscard]] Frontier sweep(const std::shared_ptr<const NormalizedFeeder>& feeder, Family family, int steps,
                             const SolverOptions& options = {}, int jobs = 1, std::string feeder_id = {});

/// Nondominated points for (minimize gini, minimize pof), first occurrence of
/// duplicates kept, input order preserved. Points without a finite
/// (gini, pof) or with an infeasible/failed status are dropped.
[[nodiscard]] std::vector<ParetoPoint> pareto_filter(std::span<const ParetoPoint> points);

/// Maximum distance to the chord between the normalized extremes of the
/// nondominated set, ties to lower pof; smallest normalized norm when every
/// point lies on the chord. A single nondominated point is returned as is.
/// Throws DegenerateFrontier when all points coincide and InputError when no
/// usable point remains.
[[nodiscard]] ParetoPoint knee_point(std::span<const ParetoPoint> points);

[[nodiscard]] std::string frontier_csv(std::span<const ParetoPoint> points);
/// Reads frontier_csv output back. Throws ParseError.
[[nodiscard]] std::vector<ParetoPoint> parse_frontier_csv(std::string_view text);

}  // namespace fairhc
