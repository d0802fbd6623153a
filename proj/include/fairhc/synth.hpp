#pragma once

// Synthetic radial feeders: a linear chain and a "fishbone" trunk with one
// short lateral per load, plus the linear-vs-branched comparison experiment.

#include <cstdint>
#include <string>

#include "fairhc/netmodel.hpp"
#include "fairhc/solver.hpp"

namespace fairhc {

enum class Layout { linear, branched };

[[nodiscard]] std::string_view to_string(Layout layout);
/// Throws InputError for anything but "linear" or "branched".
[[nodiscard]] Layout parse_layout(std::string_view text);

struct Conductor {
    double r_ohm_per_km = 0.9;
    double x_ohm_per_km = 0.08;
    double i_rated_a = 200.0;
};

struct SynthSpec {
    std::size_t n_loads = 10;
    Layout layout = Layout::linear;
    double branch_len_m = 30.0;   // each lateral (branched only)
    double trunk_len_m = 1000.0;  // whole trunk, split into equal segments
    Conductor conductor;
    double load_p_kw = 2.0;
    double load_q_kvar = 0.5;
    std::uint64_t seed = 0;  // layouts are deterministic today
    double s_base_kva = 100.0;
    double v_base_v = 400.0;
    double dg_cap_kw = kDefaultDgCapKw;
    double exchange_kw = 1000.0;  // grid-connection P and Q limits
};

/// Throws ValidationError for an invalid spec.
[[nodiscard]] Feeder generate_feeder(const SynthSpec& spec);

/// Total conductor length of generate_feeder(spec), in metres.
[[nodiscard]] double total_length_m(const SynthSpec& spec);

struct TopologyCase {
    double hc_uti = 0.0;   // kW
    double hc_egal = 0.0;  // kW
    double pof_egal = 0.0;
    double gini_uti = 0.0;
};

struct TopologyReport {
    TopologyCase linear;
    TopologyCase branched;
    bool linear_more_sensitive = false;  // PoF_egal(linear) > PoF_egal(branched)
};

/// Utilitarian and egalitarian HC on both layouts. Throws InputError unless
/// the specs have equal load counts and equal total conductor length.
[[nodiscard]] TopologyReport topology_experiment(const SynthSpec& linear, const SynthSpec& branched,
                                                 const SolverOptions& options = {});

[[nodiscard]] std::string topology_report_to_json(const TopologyReport& report);

}  // namespace fairhc
