#pragma once

// Small feeders shared by the unit and acceptance tests.

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fairhc/netmodel.hpp"

namespace fairhc::testing {

inline Line make_line(std::string from, std::string to, double r, double x, double length_m = 100.0,
                      double i_rated = 200.0, double u_nom = 400.0) {
    Line l;
    l.from_bus = std::move(from);
    l.to_bus = std::move(to);
    l.resistance = r;
    l.reactance = x;
    l.length = length_m;
    l.rated_current = i_rated;
    l.nominal_voltage = u_nom;
    return l;
}

inline std::shared_ptr<const NormalizedFeeder> per_unit(const Feeder& f) {
    return std::make_shared<const NormalizedFeeder>(to_per_unit(f));
}

// s_base 1 kVA at 230 V puts Z_base at 52.9 ohm, so r = 0.05 pu is 2.645 ohm.
inline constexpr double kTwoBusZBase = 52.9;

/// Slack plus one load bus behind r = 0.05 pu, x = 0, with v_max = 1.05 at the
/// load bus and a 10 pu DG ceiling.
inline Feeder two_bus(double load_kw = 0.0, double v_max = 1.05, double dg_cap_kw = 10.0) {
    std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack}, {.id = "a", .kind = BusKind::load, .v_max = v_max}};
    return Feeder(std::move(buses), {make_line("s", "a", 0.05 * kTwoBusZBase, 0.0, 100.0, 100.0, 230.0)},
                  {{"a", load_kw, 0.0}}, {"s", 100.0, 100.0}, 1.0, 230.0, dg_cap_kw);
}

/// s - a - b chain, voltage-limited.
inline Feeder linear3() {
    std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                           {.id = "a", .kind = BusKind::load},
                           {.id = "b", .kind = BusKind::load}};
    return Feeder(std::move(buses), {make_line("s", "a", 0.2, 0.02), make_line("a", "b", 0.3, 0.03)},
                  {{"a", 2.0, 0.5}, {"b", 3.0, 0.5}}, {"s", 500.0, 500.0}, 100.0, 400.0, 150.0);
}

/// Two unequal spurs from the slack bus.
inline Feeder star3() {
    std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                           {.id = "a", .kind = BusKind::load},
                           {.id = "b", .kind = BusKind::load}};
    return Feeder(std::move(buses), {make_line("s", "a", 0.2, 0.02), make_line("s", "b", 0.4, 0.04)},
                  {{"a", 2.0, 0.5}, {"b", 3.0, 0.5}}, {"s", 500.0, 500.0}, 100.0, 400.0, 150.0);
}

/// Two identical spurs from the slack bus with identical loads.
inline Feeder symmetric_star3() {
    std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                           {.id = "a", .kind = BusKind::load},
                           {.id = "b", .kind = BusKind::load}};
    return Feeder(std::move(buses), {make_line("s", "a", 0.3, 0.03), make_line("s", "b", 0.3, 0.03)},
                  {{"a", 2.0, 0.5}, {"b", 2.0, 0.5}}, {"s", 500.0, 500.0}, 100.0, 400.0, 150.0);
}

/// Loaded junction with two loaded spurs: 4 buses, 3 loads.
inline Feeder branch4() {
    std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                           {.id = "j", .kind = BusKind::load},
                           {.id = "a", .kind = BusKind::load},
                           {.id = "b", .kind = BusKind::load}};
    return Feeder(std::move(buses),
                  {make_line("s", "j", 0.15, 0.02), make_line("j", "a", 0.2, 0.02), make_line("j", "b", 0.35, 0.03)},
                  {{"j", 1.0, 0.2}, {"a", 2.0, 0.5}, {"b", 3.0, 0.5}}, {"s", 500.0, 500.0}, 100.0, 400.0, 150.0);
}

inline const char* kTwoBusJson = R"({
  "s_base_kva": 1, "v_base_v": 230, "dg_cap_kw": 10,
  "buses": [{"id": "s", "kind": "slack"}, {"id": "a", "kind": "load", "v_max": 1.05}],
  "lines": [{"from": "s", "to": "a", "r_ohm": 2.645, "x_ohm": 0, "length_m": 100, "i_rated_a": 100, "u_nom_v": 230}],
  "loads": [{"bus": "a", "p_kw": 0, "q_kvar": 0}],
  "connection": {"bus": "s", "p_max_kw": 100, "q_max_kvar": 100}
})";

inline const char* kCyclicJson = R"({
  "s_base_kva": 100, "v_base_v": 400, "dg_cap_kw": 100,
  "buses": [{"id": "s", "kind": "slack"}, {"id": "a", "kind": "load"}, {"id": "b", "kind": "load"}],
  "lines": [
    {"from": "s", "to": "a", "r_ohm": 0.1, "x_ohm": 0.01, "length_m": 10, "i_rated_a": 100, "u_nom_v": 400},
    {"from": "a", "to": "b", "r_ohm": 0.1, "x_ohm": 0.01, "length_m": 10, "i_rated_a": 100, "u_nom_v": 400},
    {"from": "b", "to": "s", "r_ohm": 0.1, "x_ohm": 0.01, "length_m": 10, "i_rated_a": 100, "u_nom_v": 400}],
  "loads": [{"bus": "a", "p_kw": 1, "q_kvar": 0}, {"bus": "b", "p_kw": 1, "q_kvar": 0}],
  "connection": {"bus": "s", "p_max_kw": 100, "q_max_kvar": 100}
})";

/// Random radial feeder with every non-slack bus hosting a load.
inline Feeder random_feeder(std::mt19937_64& rng, int n_buses) {
    std::uniform_real_distribution<double> r(0.02, 0.3);
    std::uniform_real_distribution<double> x(0.005, 0.08);
    std::uniform_real_distribution<double> p(0.0, 5.0);
    std::vector<Bus> buses{{.id = "b0", .kind = BusKind::slack}};
    std::vector<Line> lines;
    std::vector<Load> loads;
    for (int i = 1; i < n_buses; ++i) {
        const std::string id = "b" + std::to_string(i);
        buses.push_back({.id = id, .kind = BusKind::load});
        const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
        lines.push_back(make_line("b" + std::to_string(parent), id, r(rng), x(rng), 50.0, 300.0));
        loads.push_back({id, p(rng), 0.3 * p(rng)});
    }
    return Feeder(std::move(buses), std::move(lines), std::move(loads), {"b0", 500.0, 500.0}, 100.0, 400.0, 100.0);
}

}  // namespace fairhc::testing
