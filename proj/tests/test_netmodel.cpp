#include <doctest.h>

#include <cmath>
#include <queue>
#include <random>

#include <json.hpp>

#include "fairhc/errors.hpp"
#include "fairhc/netmodel.hpp"
#include "fixtures.hpp"

using namespace fairhc;
using namespace fairhc::testing;

namespace {

std::string chain_json(int n_junctions, int n_loads) {
    nlohmann::json doc{{"s_base_kva", 100}, {"v_base_v", 400}, {"dg_cap_kw", 50}};
    nlohmann::json buses = nlohmann::json::array({{{"id", "s"}, {"kind", "slack"}}});
    nlohmann::json lines = nlohmann::json::array();
    nlohmann::json loads = nlohmann::json::array();
    std::string prev = "s";
    for (int i = 0; i < n_junctions; ++i) {
        const std::string id = "j" + std::to_string(i);
        buses.push_back({{"id", id}, {"kind", "junction"}});
        lines.push_back({{"from", prev}, {"to", id}, {"r_ohm", 0.01}, {"x_ohm", 0.001}, {"length_m", 10},
                         {"i_rated_a", 200}, {"u_nom_v", 400}});
        prev = id;
    }
    for (int i = 0; i < n_loads; ++i) {
        const std::string id = "l" + std::to_string(i);
        buses.push_back({{"id", id}, {"kind", "load"}});
        lines.push_back({{"from", prev}, {"to", id}, {"r_ohm", 0.02}, {"x_ohm", 0.002}, {"length_m", 20},
                         {"i_rated_a", 200}, {"u_nom_v", 400}});
        loads.push_back({{"bus", id}, {"p_kw", 1.0}, {"q_kvar", 0.2}});
    }
    doc["buses"] = buses;
    doc["lines"] = lines;
    doc["loads"] = loads;
    doc["connection"] = {{"bus", "s"}, {"p_max_kw", 200}, {"q_max_kvar", 200}};
    return doc.dump();
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("netmodel") {
    TEST_CASE("smallest legal feeder parses") {
        const Feeder f = parse_feeder(kTwoBusJson);
        CHECK(f.buses().size() == 2);
        CHECK(f.loads().size() == 1);
        CHECK(f.lines().size() == 1);
        CHECK(f.buses()[1].v_max == 1.05);
        CHECK(f.buses()[0].v_min == kDefaultVMin);
    }

    TEST_CASE("cycle is rejected as not radial") {
        try {
            (void)parse_feeder(kCyclicJson);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("not radial") != std::string::npos);
        }
    }

    TEST_CASE("twelve-bus four-load chain keeps its counts") {
        const Feeder f = parse_feeder(chain_json(7, 4));
        CHECK(f.buses().size() == 12);
        CHECK(f.loads().size() == 4);
        CHECK(feeder_stats(f).n_buses == 12);
    }

    TEST_CASE("malformed and schema-violating input") {
        CHECK_THROWS_AS((void)parse_feeder("{not json"), ParseError);
        const std::string base = kTwoBusJson;
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("dg_cap_kw": 10,)", "")), SchemaError);
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("p_kw": 0,)", R"("p_kw": 0, "extra": 1,)")), SchemaError);
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("kind": "load")", R"("kind": "house")")), SchemaError);
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("r_ohm": 2.645)", R"("r_ohm": "x")")), SchemaError);
    }

    TEST_CASE("structural validation") {
        const std::string base = kTwoBusJson;
        // second slack
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("kind": "load", "v_max": 1.05)", R"("kind": "slack")")),
                        ValidationError);
        // zero resistance
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("r_ohm": 2.645)", R"("r_ohm": 0)")), ValidationError);
        // load on an unknown bus
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"({"bus": "a", "p_kw")", R"({"bus": "zz", "p_kw")")),
                        InputError);
        // inverted voltage band
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("v_max": 1.05)", R"("v_max": 0.5)")), ValidationError);
        // line to itself
        CHECK_THROWS_AS((void)parse_feeder(replace(base, R"("to": "a")", R"("to": "s")")), ValidationError);
    }

    TEST_CASE("disconnected network is rejected") {
        std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                               {.id = "a", .kind = BusKind::load},
                               {.id = "b", .kind = BusKind::load},
                               {.id = "c", .kind = BusKind::junction}};
        // three lines for four buses, but a-b-c form a loop away from s
        std::vector<Line> lines{make_line("a", "b", 0.1, 0.0), make_line("b", "c", 0.1, 0.0),
                                make_line("c", "a", 0.1, 0.0)};
        CHECK_THROWS_AS(Feeder(buses, lines, {{"a", 1, 0}, {"b", 1, 0}}, {"s", 10, 10}, 100, 400), ValidationError);
    }

    TEST_CASE("per-unit conversion") {
        std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack}, {.id = "a", .kind = BusKind::load}};
        const Feeder f(buses, {make_line("s", "a", 52.9, 0.0, 10, 100, 230)}, {{"a", 0.5, 0.1}}, {"s", 10, 5},
                       1.0, 230.0);
        const NormalizedFeeder n = to_per_unit(f);
        // 230^2 / (1 kVA * 1000)
        CHECK(n.z_base == doctest::Approx(52.9).epsilon(1e-14));
        CHECK(n.lines[0].r == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(n.lines[0].s_rated == doctest::Approx(23.0).epsilon(1e-14));
        CHECK(n.p_demand[0] == doctest::Approx(0.5));
        CHECK(n.q_exchange_max == doctest::Approx(5.0));
    }

    TEST_CASE("normalize then denormalize is the identity") {
        for (const Feeder& f : {linear3(), star3(), branch4(), two_bus(0.1)}) {
            const Feeder back = denormalize(to_per_unit(f));
            REQUIRE(back.lines().size() == f.lines().size());
            for (std::size_t l = 0; l < f.lines().size(); ++l) {
                CHECK(back.lines()[l].resistance == doctest::Approx(f.lines()[l].resistance).epsilon(1e-12));
                CHECK(back.lines()[l].reactance == doctest::Approx(f.lines()[l].reactance).epsilon(1e-12));
                CHECK(back.lines()[l].rated_current == doctest::Approx(f.lines()[l].rated_current).epsilon(1e-12));
            }
            for (std::size_t d = 0; d < f.loads().size(); ++d)
                CHECK(back.loads()[d].p_demand == doctest::Approx(f.loads()[d].p_demand).epsilon(1e-12));
            CHECK(back.dg_cap() == doctest::Approx(f.dg_cap()).epsilon(1e-12));
        }
    }

    TEST_CASE("serialize then parse is the identity") {
        for (const Feeder& f : {linear3(), branch4(), parse_feeder(chain_json(3, 5))}) {
            const std::string text = serialize_feeder(f);
            const Feeder g = parse_feeder(text);
            CHECK(serialize_feeder(g) == text);
            CHECK(g.buses().size() == f.buses().size());
            for (std::size_t i = 0; i < f.lines().size(); ++i) {
                CHECK(g.lines()[i].resistance == f.lines()[i].resistance);
                CHECK(g.lines()[i].from_bus == f.lines()[i].from_bus);
            }
        }
    }

    TEST_CASE("feeder statistics") {
        std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack}, {.id = "a", .kind = BusKind::load}};
        const Feeder one(buses, {make_line("s", "a", 0.219, 0.014, 164)}, {{"a", 1, 0}}, {"s", 10, 10}, 100, 400);
        const FeederStats s = feeder_stats(one);
        CHECK(s.total_length_km == doctest::Approx(0.164));
        CHECK(s.r_over_x == doctest::Approx(0.219 / 0.014));
        CHECK(s.r_over_x == doctest::Approx(15.64).epsilon(1e-3));

        std::vector<Bus> three{{.id = "s", .kind = BusKind::slack},
                               {.id = "a", .kind = BusKind::junction},
                               {.id = "b", .kind = BusKind::load}};
        const Feeder two(three, {make_line("s", "a", 1, 1), make_line("a", "b", 1, 1)}, {{"b", 1, 0}}, {"s", 10, 10},
                         100, 400);
        const FeederStats t = feeder_stats(two);
        CHECK(t.total_resistance == doctest::Approx(2.0));
        CHECK(t.total_reactance == doctest::Approx(2.0));
        CHECK(t.impedance == doctest::Approx(2.0 * std::sqrt(2.0)));

        CHECK(std::isinf(feeder_stats(two_bus()).r_over_x));
    }

    TEST_CASE("electrical distance") {
        std::vector<Bus> buses{{.id = "s", .kind = BusKind::slack},
                               {.id = "a", .kind = BusKind::junction},
                               {.id = "b", .kind = BusKind::junction},
                               {.id = "c", .kind = BusKind::load}};
        const Feeder f(buses, {make_line("s", "a", 3, 4), make_line("a", "b", 0.6, 0.8), make_line("b", "c", 0.6, 0.8)},
                       {{"c", 1, 0}}, {"s", 10, 10}, 100, 400);
        CHECK(electrical_distance(f, "s") == 0.0);
        CHECK(electrical_distance(f, "a") == doctest::Approx(5.0));
        CHECK(electrical_distance(f, "c") == doctest::Approx(7.0));
        CHECK_THROWS_AS((void)electrical_distance(f, "nope"), UnknownBus);

        std::vector<Bus> chain{{.id = "s", .kind = BusKind::slack},
                               {.id = "a", .kind = BusKind::junction},
                               {.id = "b", .kind = BusKind::junction},
                               {.id = "c", .kind = BusKind::load}};
        const Feeder unit(chain, {make_line("s", "a", 0.6, 0.8), make_line("a", "b", 0.6, 0.8),
                                  make_line("b", "c", 0.6, 0.8)},
                          {{"c", 1, 0}}, {"s", 10, 10}, 100, 400);
        CHECK(electrical_distance(unit, "c") == doctest::Approx(3.0));
    }

    TEST_CASE("electrical distance is non-decreasing along every root-to-leaf path") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + trial % 15;
            std::vector<Bus> buses{{.id = "b0", .kind = BusKind::slack}};
            std::vector<Line> lines;
            std::vector<Load> loads;
            for (int i = 1; i < n; ++i) {
                const std::string id = "b" + std::to_string(i);
                buses.push_back({.id = id, .kind = BusKind::load});
                const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
                lines.push_back(make_line("b" + std::to_string(parent), id, u(rng), u(rng)));
                loads.push_back({id, 1.0, 0.0});
            }
            const Feeder f(buses, lines, loads, {"b0", 100, 100}, 100, 400);
            const auto d = electrical_distances(f);
            // independent breadth-first path sums
            std::vector<double> ref(buses.size(), -1.0);
            ref[0] = 0.0;
            std::queue<int> q;
            q.push(0);
            while (!q.empty()) {
                const int b = q.front();
                q.pop();
                for (const Line& l : lines) {
                    const int from = std::stoi(l.from_bus.substr(1));
                    const int to = std::stoi(l.to_bus.substr(1));
                    if (from == b && ref[to] < 0) {
                        ref[to] = ref[b] + std::hypot(l.resistance, l.reactance);
                        q.push(to);
                    }
                }
            }
            const Topology& topo = f.topology();
            for (std::size_t i = 0; i < buses.size(); ++i) {
                CHECK(d[i] == doctest::Approx(ref[i]).epsilon(1e-12));
                if (i != topo.slack) CHECK(d[i] >= d[topo.parent[i]]);
            }
        }
    }
}
