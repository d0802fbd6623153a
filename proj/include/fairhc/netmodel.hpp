#pragma once

// Radial low-voltage feeder model: physical-unit domain types, the JSON feeder
// format, per-unit normalization and aggregate feeder statistics.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairhc {

inline constexpr double kDefaultVMin = 0.90;
inline constexpr double kDefaultVMax = 1.10;
inline constexpr double kDefaultAngleLimit = 0.1745;  // rad, about 10 degrees
inline constexpr double kDefaultDgCapKw = 1000.0;
inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

enum class BusKind { slack, junction, load };

[[nodiscard]] std::string_view to_string(BusKind kind);

struct Bus {
    std::string id;
    BusKind kind = BusKind::junction;
    double v_min = kDefaultVMin;  // pu
    double v_max = kDefaultVMax;  // pu
    double dtheta_min = -kDefaultAngleLimit;  // rad
    double dtheta_max = kDefaultAngleLimit;   // rad
};

struct Line {
    std::string from_bus;
    std::string to_bus;
    double resistance = 0.0;       // ohm
    double reactance = 0.0;        // ohm
    double length = 0.0;           // m
    double rated_current = 0.0;    // A
    double nominal_voltage = 0.0;  // V

    /// Series conductance 1/ohm.
    [[nodiscard]] double conductance() const;
    /// Series susceptance 1/ohm (negative for inductive lines).
    [[nodiscard]] double susceptance() const;
};

struct GridConnection {
    std::string bus;
    double p_max = 0.0;  // kW
    double q_max = 0.0;  // kvar
};

struct Load {
    std::string bus;
    double p_demand = 0.0;  // kW
    double q_demand = 0.0;  // kvar
};

/// Tree structure of a radial feeder rooted at the slack bus.
struct Topology {
    std::size_t slack = 0;
    std::vector<std::size_t> order;        // breadth-first from the slack bus
    std::vector<std::size_t> parent;       // kNoIndex for the slack bus
    std::vector<std::size_t> parent_line;  // line joining a bus to its parent
    std::vector<std::size_t> depth;
};

/// Validated, immutable radial feeder in physical units.
///
/// Construction checks every field invariant and the network structure
/// (exactly one slack bus, connected, |lines| = |buses| - 1, acyclic) and
/// throws ValidationError on the first violation found.
class Feeder {
  public:
    Feeder(std::vector<Bus> buses, std::vector<Line> lines, std::vector<Load> loads,
           GridConnection connection, double s_base_kva, double v_base_v,
           double dg_cap_kw = kDefaultDgCapKw);

    [[nodiscard]] const std::vector<Bus>& buses() const noexcept { return buses_; }
    [[nodiscard]] const std::vector<Line>& lines() const noexcept { return lines_; }
    [[nodiscard]] const std::vector<Load>& loads() const noexcept { return loads_; }
    [[nodiscard]] const GridConnection& connection() const noexcept { return connection_; }
    [[nodiscard]] double s_base() const noexcept { return s_base_; }
    [[nodiscard]] double v_base() const noexcept { return v_base_; }
    [[nodiscard]] double dg_cap() const noexcept { return dg_cap_; }
    [[nodiscard]] const Topology& topology() const noexcept { return topology_; }

    [[nodiscard]] std::optional<std::size_t> find_bus(std::string_view id) const;
    /// Throws UnknownBus.
    [[nodiscard]] std::size_t bus_index(std::string_view id) const;
    /// Index into loads() of the load hosted at `bus`, or kNoIndex.
    [[nodiscard]] std::size_t load_at(std::size_t bus) const { return load_of_bus_[bus]; }
    [[nodiscard]] std::size_t line_from(std::size_t line) const { return line_ends_[line].first; }
    [[nodiscard]] std::size_t line_to(std::size_t line) const { return line_ends_[line].second; }

  private:
    void validate_fields() const;
    void build_topology();

    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<Load> loads_;
    GridConnection connection_;
    double s_base_;
    double v_base_;
    double dg_cap_;

    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::pair<std::size_t, std::size_t>> line_ends_;
    std::vector<std::size_t> load_of_bus_;
    Topology topology_;
};

/// Feeder in per-unit on (s_base, v_base), indexed by position.
struct NormalizedFeeder {
    struct BusData {
        double v_min;
        double v_max;
        double dtheta_min;
        double dtheta_max;
    };
    struct LineData {
        std::size_t from;
        std::size_t to;
        double r;        // pu
        double x;        // pu
        double g;        // pu
        double b;        // pu
        double s_rated;  // pu apparent-power limit U * I / S_base
    };

    std::vector<BusData> buses;
    std::vector<LineData> lines;
    std::vector<std::size_t> load_bus;
    std::vector<double> p_demand;  // pu
    std::vector<double> q_demand;  // pu
    std::vector<std::size_t> load_of_bus;
    double p_exchange_max = 0.0;  // pu
    double q_exchange_max = 0.0;  // pu
    double dg_cap = 0.0;          // pu per load
    double s_base = 0.0;          // kVA
    double v_base = 0.0;          // V
    double z_base = 0.0;          // ohm
    Topology topology;

    // Carried for denormalization and reporting.
    std::vector<std::string> bus_ids;
    std::vector<BusKind> bus_kinds;
    std::vector<double> line_length;   // m
    std::vector<double> line_u_nom;    // V

    [[nodiscard]] std::size_t n_buses() const noexcept { return buses.size(); }
    [[nodiscard]] std::size_t n_lines() const noexcept { return lines.size(); }
    [[nodiscard]] std::size_t n_loads() const noexcept { return load_bus.size(); }
    [[nodiscard]] std::size_t slack() const noexcept { return topology.slack; }
};

struct FeederStats {
    double total_length_km = 0.0;
    double total_resistance = 0.0;  // ohm
    double total_reactance = 0.0;   // ohm
    double r_over_x = 0.0;          // +inf when the summed reactance is zero
    double impedance = 0.0;         // ohm, sqrt(R^2 + X^2) of the sums
    std::size_t n_loads = 0;
    std::size_t n_buses = 0;
};

/// Parses and validates the JSON feeder format.
/// Throws ParseError, SchemaError or ValidationError.
[[nodiscard]] Feeder parse_feeder(std::string_view text);
[[nodiscard]] Feeder load_feeder_file(const std::string& path);
/// Full-precision JSON; parse_feeder(serialize_feeder(f)) reproduces f.
[[nodiscard]] std::string serialize_feeder(const Feeder& feeder, int indent = 2);

[[nodiscard]] NormalizedFeeder to_per_unit(const Feeder& feeder);
[[nodiscard]] Feeder denormalize(const NormalizedFeeder& feeder);

[[nodiscard]] FeederStats feeder_stats(const Feeder& feeder);

/// Sum of series impedance magnitudes on the slack-to-bus path, in ohm.
[[nodiscard]] double electrical_distance(const Feeder& feeder, std::string_view bus);
[[nodiscard]] std::vector<double> electrical_distances(const Feeder& feeder);

}  // namespace fairhc
