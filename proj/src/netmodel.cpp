#include "fairhc/netmodel.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairhc/errors.hpp"

namespace fairhc {

using nlohmann::json;

std::string_view to_string(BusKind kind) {
    switch (kind) {
        case BusKind::slack: return "slack";
        case BusKind::junction: return "junction";
        case BusKind::load: return "load";
    }
    return "junction";
}

double Line::conductance() const {
    return resistance / (resistance * resistance + reactance * reactance);
}

double Line::susceptance() const {
    return -reactance / (resistance * resistance + reactance * reactance);
}

namespace {

class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // false when a and b were already joined
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[b] = a;
        return true;
    }

  private:
    std::vector<std::size_t> parent_;
};

[[noreturn]] void invalid(const std::string& msg) { throw ValidationError(msg); }

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

Feeder::Feeder(std::vector<Bus> buses, std::vector<Line> lines, std::vector<Load> loads,
               GridConnection connection, double s_base_kva, double v_base_v, double dg_cap_kw)
    : buses_(std::move(buses)),
      lines_(std::move(lines)),
      loads_(std::move(loads)),
      connection_(std::move(connection)),
      s_base_(s_base_kva),
      v_base_(v_base_v),
      dg_cap_(dg_cap_kw) {
    validate_fields();
    build_topology();
}

void Feeder::validate_fields() const {
    if (!positive(s_base_)) invalid("s_base_kva must be positive");
    if (!positive(v_base_)) invalid("v_base_v must be positive");
    if (!positive(dg_cap_)) invalid("dg_cap_kw must be positive");
    if (buses_.empty()) invalid("feeder has no buses");

    for (const auto& bus : buses_) {
        if (bus.id.empty()) invalid("bus with empty id");
        if (!(bus.v_min > 0.0 && bus.v_min < bus.v_max && std::isfinite(bus.v_max)))
            invalid("bus '" + bus.id + "': require 0 < v_min < v_max");
        if (!(bus.dtheta_min < 0.0 && bus.dtheta_max > 0.0 && std::isfinite(bus.dtheta_min) &&
              std::isfinite(bus.dtheta_max)))
            invalid("bus '" + bus.id + "': require dtheta_min < 0 < dtheta_max");
    }
    for (const auto& line : lines_) {
        const std::string tag = "line " + line.from_bus + "-" + line.to_bus;
        if (line.from_bus == line.to_bus) invalid(tag + ": from and to bus coincide");
        if (!positive(line.resistance)) invalid(tag + ": resistance must be positive");
        if (!(std::isfinite(line.reactance) && line.reactance >= 0.0))
            invalid(tag + ": reactance must be non-negative");
        if (!positive(line.rated_current)) invalid(tag + ": rated current must be positive");
        if (!positive(line.nominal_voltage)) invalid(tag + ": nominal voltage must be positive");
        if (!(std::isfinite(line.length) && line.length >= 0.0))
            invalid(tag + ": length must be non-negative");
    }
    for (const auto& load : loads_) {
        if (!(std::isfinite(load.p_demand) && load.p_demand >= 0.0))
            invalid("load at '" + load.bus + "': p_kw must be non-negative");
        if (!std::isfinite(load.q_demand)) invalid("load at '" + load.bus + "': q_kvar not finite");
    }
    if (!positive(connection_.p_max) || !positive(connection_.q_max))
        invalid("connection limits must be positive");
}

void Feeder::build_topology() {
    const std::size_t n = buses_.size();
    std::size_t slack = kNoIndex;
    for (std::size_t i = 0; i < n; ++i) {
        if (!index_.emplace(buses_[i].id, i).second) invalid("duplicate bus id '" + buses_[i].id + "'");
        if (buses_[i].kind == BusKind::slack) {
            if (slack != kNoIndex) invalid("duplicate slack bus '" + buses_[i].id + "'");
            slack = i;
        }
    }
    if (slack == kNoIndex) invalid("feeder has no slack bus");

    const auto lookup = [this](const std::string& id, const std::string& what) {
        auto it = index_.find(id);
        if (it == index_.end()) invalid(what + " refers to unknown bus '" + id + "'");
        return it->second;
    };

    if (lookup(connection_.bus, "connection") != slack) invalid("connection bus must be the slack bus");

    if (lines_.size() + 1 != n) invalid("not radial: expected " + std::to_string(n - 1) + " lines, found " +
                                        std::to_string(lines_.size()));

    DisjointSets sets(n);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacent(n);
    line_ends_.reserve(lines_.size());
    for (std::size_t l = 0; l < lines_.size(); ++l) {
        const std::size_t a = lookup(lines_[l].from_bus, "line");
        const std::size_t b = lookup(lines_[l].to_bus, "line");
        if (!sets.unite(a, b)) invalid("not radial: line " + lines_[l].from_bus + "-" + lines_[l].to_bus +
                                       " closes a cycle");
        line_ends_.emplace_back(a, b);
        adjacent[a].emplace_back(b, l);
        adjacent[b].emplace_back(a, l);
    }
    // n - 1 acyclic edges on n vertices always form a spanning tree.

    load_of_bus_.assign(n, kNoIndex);
    for (std::size_t d = 0; d < loads_.size(); ++d) {
        const std::size_t bus = lookup(loads_[d].bus, "load");
        if (buses_[bus].kind != BusKind::load) invalid("load placed at non-load bus '" + loads_[d].bus + "'");
        if (load_of_bus_[bus] != kNoIndex) invalid("bus '" + loads_[d].bus + "' hosts more than one load");
        load_of_bus_[bus] = d;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (buses_[i].kind == BusKind::load && load_of_bus_[i] == kNoIndex)
            invalid("load bus '" + buses_[i].id + "' has no load record");
    }

    topology_.slack = slack;
    topology_.parent.assign(n, kNoIndex);
    topology_.parent_line.assign(n, kNoIndex);
    topology_.depth.assign(n, 0);
    topology_.order.clear();
    topology_.order.reserve(n);
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> queue;
    queue.push(slack);
    seen[slack] = true;
    while (!queue.empty()) {
        const std::size_t m = queue.front();
        queue.pop();
        topology_.order.push_back(m);
        for (auto [k, l] : adjacent[m]) {
            if (seen[k]) continue;
            seen[k] = true;
            topology_.parent[k] = m;
            topology_.parent_line[k] = l;
            topology_.depth[k] = topology_.depth[m] + 1;
            queue.push(k);
        }
    }
}

std::optional<std::size_t> Feeder::find_bus(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Feeder::bus_index(std::string_view id) const {
    auto found = find_bus(id);
    if (!found) throw UnknownBus(std::string(id));
    return *found;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void expect_keys(const json& obj, const std::string& where, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional = {}) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const char* key : required) {
        if (!obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    }
    std::set<std::string> allowed;
    for (const char* key : required) allowed.insert(key);
    for (const char* key : optional) allowed.insert(key);
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) throw SchemaError(where + ": unexpected field '" + item.key() + "'");
    }
}

double number(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

std::string text(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

const json& array(const json& obj, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_array()) throw SchemaError(std::string("field '") + key + "' must be an array");
    return v;
}

BusKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "slack") return BusKind::slack;
    if (s == "junction") return BusKind::junction;
    if (s == "load") return BusKind::load;
    throw SchemaError(where + ": unknown bus kind '" + s + "'");
}

}  // namespace

Feeder parse_feeder(std::string_view content) {
    json doc;
    try {
        doc = json::parse(content.begin(), content.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }

    expect_keys(doc, "feeder", {"s_base_kva", "v_base_v", "dg_cap_kw", "buses", "lines", "loads", "connection"});

    std::vector<Bus> buses;
    for (const auto& b : array(doc, "buses")) {
        const std::string where = "buses[" + std::to_string(buses.size()) + "]";
        expect_keys(b, where, {"id", "kind"}, {"v_min", "v_max", "dtheta_min", "dtheta_max"});
        Bus bus;
        bus.id = text(b, "id", where);
        bus.kind = parse_kind(text(b, "kind", where), where);
        if (b.contains("v_min")) bus.v_min = number(b, "v_min", where);
        if (b.contains("v_max")) bus.v_max = number(b, "v_max", where);
        if (b.contains("dtheta_min")) bus.dtheta_min = number(b, "dtheta_min", where);
        if (b.contains("dtheta_max")) bus.dtheta_max = number(b, "dtheta_max", where);
        buses.push_back(std::move(bus));
    }

    std::vector<Line> lines;
    for (const auto& l : array(doc, "lines")) {
        const std::string where = "lines[" + std::to_string(lines.size()) + "]";
        expect_keys(l, where, {"from", "to", "r_ohm", "x_ohm", "length_m", "i_rated_a", "u_nom_v"});
        lines.push_back(Line{text(l, "from", where), text(l, "to", where), number(l, "r_ohm", where),
                             number(l, "x_ohm", where), number(l, "length_m", where),
                             number(l, "i_rated_a", where), number(l, "u_nom_v", where)});
    }

    std::vector<Load> loads;
    for (const auto& d : array(doc, "loads")) {
        const std::string where = "loads[" + std::to_string(loads.size()) + "]";
        expect_keys(d, where, {"bus", "p_kw", "q_kvar"});
        loads.push_back(Load{text(d, "bus", where), number(d, "p_kw", where), number(d, "q_kvar", where)});
    }

    const json& c = doc.at("connection");
    expect_keys(c, "connection", {"bus", "p_max_kw", "q_max_kvar"});
    GridConnection connection{text(c, "bus", "connection"), number(c, "p_max_kw", "connection"),
                              number(c, "q_max_kvar", "connection")};

    return Feeder(std::move(buses), std::move(lines), std::move(loads), std::move(connection),
                  number(doc, "s_base_kva", "feeder"), number(doc, "v_base_v", "feeder"),
                  number(doc, "dg_cap_kw", "feeder"));
}

Feeder load_feeder_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_feeder(buffer.str());
}

std::string serialize_feeder(const Feeder& feeder, int indent) {
    json doc;
    doc["s_base_kva"] = feeder.s_base();
    doc["v_base_v"] = feeder.v_base();
    doc["dg_cap_kw"] = feeder.dg_cap();
    json buses = json::array();
    for (const auto& b : feeder.buses()) {
        buses.push_back({{"id", b.id},
                         {"kind", std::string(to_string(b.kind))},
                         {"v_min", b.v_min},
                         {"v_max", b.v_max},
                         {"dtheta_min", b.dtheta_min},
                         {"dtheta_max", b.dtheta_max}});
    }
    doc["buses"] = std::move(buses);
    json lines = json::array();
    for (const auto& l : feeder.lines()) {
        lines.push_back({{"from", l.from_bus},
                         {"to", l.to_bus},
                         {"r_ohm", l.resistance},
                         {"x_ohm", l.reactance},
                         {"length_m", l.length},
                         {"i_rated_a", l.rated_current},
                         {"u_nom_v", l.nominal_voltage}});
    }
    doc["lines"] = std::move(lines);
    json loads = json::array();
    for (const auto& d : feeder.loads()) {
        loads.push_back({{"bus", d.bus}, {"p_kw", d.p_demand}, {"q_kvar", d.q_demand}});
    }
    doc["loads"] = std::move(loads);
    doc["connection"] = {{"bus", feeder.connection().bus},
                         {"p_max_kw", feeder.connection().p_max},
                         {"q_max_kvar", feeder.connection().q_max}};
    return doc.dump(indent);
}

// ---------------------------------------------------------------------------
// Per-unit

NormalizedFeeder to_per_unit(const Feeder& feeder) {
    NormalizedFeeder out;
    out.s_base = feeder.s_base();
    out.v_base = feeder.v_base();
    out.z_base = feeder.v_base() * feeder.v_base() / (feeder.s_base() * 1000.0);
    const double s_base_va = feeder.s_base() * 1000.0;

    for (const auto& b : feeder.buses()) {
        out.buses.push_back({b.v_min, b.v_max, b.dtheta_min, b.dtheta_max});
        out.bus_ids.push_back(b.id);
        out.bus_kinds.push_back(b.kind);
    }
    for (std::size_t l = 0; l < feeder.lines().size(); ++l) {
        const Line& line = feeder.lines()[l];
        const double r = line.resistance / out.z_base;
        const double x = line.reactance / out.z_base;
        const double den = r * r + x * x;
        out.lines.push_back({feeder.line_from(l), feeder.line_to(l), r, x, r / den, -x / den,
                             line.nominal_voltage * line.rated_current / s_base_va});
        out.line_length.push_back(line.length);
        out.line_u_nom.push_back(line.nominal_voltage);
    }
    out.load_of_bus.assign(feeder.buses().size(), kNoIndex);
    for (std::size_t d = 0; d < feeder.loads().size(); ++d) {
        const std::size_t bus = feeder.bus_index(feeder.loads()[d].bus);
        out.load_bus.push_back(bus);
        out.load_of_bus[bus] = d;
        out.p_demand.push_back(feeder.loads()[d].p_demand / feeder.s_base());
        out.q_demand.push_back(feeder.loads()[d].q_demand / feeder.s_base());
    }
    out.p_exchange_max = feeder.connection().p_max / feeder.s_base();
    out.q_exchange_max = feeder.connection().q_max / feeder.s_base();
    out.dg_cap = feeder.dg_cap() / feeder.s_base();
    out.topology = feeder.topology();
    return out;
}

Feeder denormalize(const NormalizedFeeder& f) {
    const double s_base_va = f.s_base * 1000.0;
    std::vector<Bus> buses;
    for (std::size_t i = 0; i < f.n_buses(); ++i) {
        buses.push_back(Bus{f.bus_ids[i], f.bus_kinds[i], f.buses[i].v_min, f.buses[i].v_max,
                            f.buses[i].dtheta_min, f.buses[i].dtheta_max});
    }
    std::vector<Line> lines;
    for (std::size_t l = 0; l < f.n_lines(); ++l) {
        const auto& line = f.lines[l];
        lines.push_back(Line{f.bus_ids[line.from], f.bus_ids[line.to], line.r * f.z_base, line.x * f.z_base,
                             f.line_length[l], line.s_rated * s_base_va / f.line_u_nom[l], f.line_u_nom[l]});
    }
    std::vector<Load> loads;
    for (std::size_t d = 0; d < f.n_loads(); ++d) {
        loads.push_back(Load{f.bus_ids[f.load_bus[d]], f.p_demand[d] * f.s_base, f.q_demand[d] * f.s_base});
    }
    GridConnection connection{f.bus_ids[f.slack()], f.p_exchange_max * f.s_base, f.q_exchange_max * f.s_base};
    return Feeder(std::move(buses), std::move(lines), std::move(loads), std::move(connection), f.s_base, f.v_base,
                  f.dg_cap * f.s_base);
}

// ---------------------------------------------------------------------------
// Statistics

FeederStats feeder_stats(const Feeder& feeder) {
    FeederStats stats;
    for (const auto& line : feeder.lines()) {
        stats.total_length_km += line.length / 1000.0;
        stats.total_resistance += line.resistance;
        stats.total_reactance += line.reactance;
    }
    stats.r_over_x = stats.total_reactance > 0.0 ? stats.total_resistance / stats.total_reactance
                                                 : std::numeric_limits<double>::infinity();
    stats.impedance = std::hypot(stats.total_resistance, stats.total_reactance);
    stats.n_loads = feeder.loads().size();
    stats.n_buses = feeder.buses().size();
    return stats;
}

std::vector<double> electrical_distances(const Feeder& feeder) {
    const Topology& topo = feeder.topology();
    std::vector<double> distance(feeder.buses().size(), 0.0);
    // parents precede children in breadth-first order
    for (std::size_t bus : topo.order) {
        if (bus == topo.slack) continue;
        const Line& line = feeder.lines()[topo.parent_line[bus]];
        distance[bus] = distance[topo.parent[bus]] + std::hypot(line.resistance, line.reactance);
    }
    return distance;
}

double electrical_distance(const Feeder& feeder, std::string_view bus) {
    const std::size_t index = feeder.bus_index(bus);
    return electrical_distances(feeder)[index];
}

}  // namespace fairhc
