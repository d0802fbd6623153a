#include "fairhc/synth.hpp"

#include <cmath>
#include <memory>

#include <fmt/format.h>
#include <json.hpp>

#include "fairhc/errors.hpp"
#include "fairhc/kpi.hpp"

namespace fairhc {
namespace {

void check_spec(const SynthSpec& s) {
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0 && std::isfinite(v))) throw ValidationError(fmt::format("synth: {} must be positive", name));
    };
    if (s.n_loads < 1) throw ValidationError("synth: n_loads must be at least 1");
    positive(s.trunk_len_m, "trunk_len_m");
    if (s.layout == Layout::branched) positive(s.branch_len_m, "branch_len_m");
    positive(s.conductor.r_ohm_per_km, "r_ohm_per_km");
    positive(s.conductor.x_ohm_per_km, "x_ohm_per_km");
    positive(s.conductor.i_rated_a, "i_rated_a");
    positive(s.s_base_kva, "s_base_kva");
    positive(s.v_base_v, "v_base_v");
    positive(s.dg_cap_kw, "dg_cap_kw");
    positive(s.exchange_kw, "exchange_kw");
    if (!(s.load_p_kw >= 0.0)) throw ValidationError("synth: load_p_kw must be non-negative");
}

Line segment(const SynthSpec& s, std::string from, std::string to, double length_m) {
    Line l;
    l.from_bus = std::move(from);
    l.to_bus = std::move(to);
    l.length = length_m;
    l.resistance = s.conductor.r_ohm_per_km * length_m / 1000.0;
    l.reactance = s.conductor.x_ohm_per_km * length_m / 1000.0;
    l.rated_current = s.conductor.i_rated_a;
    l.nominal_voltage = s.v_base_v;
    return l;
}

TopologyCase run_case(const SynthSpec& spec, const SolverOptions& options) {
    const auto feeder = std::make_shared<const NormalizedFeeder>(to_per_unit(generate_feeder(spec)));
    const ReferenceSolutions refs = solve_references(feeder, options);
    TopologyCase c;
    c.hc_uti = refs.utilitarian.hc_total;
    c.hc_egal = refs.egalitarian.hc_total;
    c.pof_egal = price_of_fairness(c.hc_uti, c.hc_egal);
    c.gini_uti = gini(refs.utilitarian.allocation);
    return c;
}

}  // namespace

std::string_view to_string(Layout layout) { return layout == Layout::linear ? "linear" : "branched"; }

Layout parse_layout(std::string_view text) {
    if (text == "linear") return Layout::linear;
    if (text == "branched") return Layout::branched;
    throw InputError(fmt::format("unknown layout '{}' (expected linear or branched)", text));
}

double total_length_m(const SynthSpec& spec) {
    if (spec.layout == Layout::linear) return spec.trunk_len_m;
    return spec.trunk_len_m + static_cast<double>(spec.n_loads) * spec.branch_len_m;
}

Feeder generate_feeder(const SynthSpec& spec) {
    check_spec(spec);
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Load> loads;
    buses.push_back({.id = "slack", .kind = BusKind::slack});
    const double seg = spec.trunk_len_m / static_cast<double>(spec.n_loads);
    std::string prev = "slack";
    for (std::size_t i = 1; i <= spec.n_loads; ++i) {
        if (spec.layout == Layout::linear) {
            const std::string id = fmt::format("n{}", i);
            buses.push_back({.id = id, .kind = BusKind::load});
            lines.push_back(segment(spec, prev, id, seg));
            loads.push_back({id, spec.load_p_kw, spec.load_q_kvar});
            prev = id;
        } else {
            const std::string junction = fmt::format("j{}", i);
            const std::string load = fmt::format("l{}", i);
            buses.push_back({.id = junction, .kind = BusKind::junction});
            buses.push_back({.id = load, .kind = BusKind::load});
            lines.push_back(segment(spec, prev, junction, seg));
            lines.push_back(segment(spec, junction, load, spec.branch_len_m));
            loads.push_back({load, spec.load_p_kw, spec.load_q_kvar});
            prev = junction;
        }
    }
    const GridConnection conn{"slack", spec.exchange_kw, spec.exchange_kw};
    return Feeder(std::move(buses), std::move(lines), std::move(loads), conn, spec.s_base_kva, spec.v_base_v,
                  spec.dg_cap_kw);
}

TopologyReport topology_experiment(const SynthSpec& linear, const SynthSpec& branched, const SolverOptions& options) {
    if (linear.n_loads != branched.n_loads) throw InputError("topology experiment needs equal load counts");
    const double la = total_length_m(linear);
    const double lb = total_length_m(branched);
    if (std::fabs(la - lb) > 1e-9 * std::max(la, lb))
        throw InputError(fmt::format("topology experiment needs equal conductor length ({} m vs {} m)", la, lb));
    TopologyReport r;
    r.linear = run_case(linear, options);
    r.branched = run_case(branched, options);
    r.linear_more_sensitive = r.linear.pof_egal > r.branched.pof_egal;
    return r;
}

std::string topology_report_to_json(const TopologyReport& r) {
    const auto one = [](const TopologyCase& c) {
        return nlohmann::json{
            {"hc_uti_kw", c.hc_uti}, {"hc_egal_kw", c.hc_egal}, {"pof_egal", c.pof_egal}, {"gini_uti", c.gini_uti}};
    };
    const nlohmann::json doc{
        {"linear", one(r.linear)}, {"branched", one(r.branched)}, {"linear_more_sensitive", r.linear_more_sensitive}};
    return doc.dump(2);
}

}  // namespace fairhc
