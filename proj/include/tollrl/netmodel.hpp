#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tollrl {

/// Simulation clock: step length, toll-update period and horizon, all in
/// seconds. The toll period and the horizon are integral multiples of dt.
struct TimeGrid {
  double dt = 6.0;
  double toll_period = 60.0;
  double horizon = 7200.0;

  /// Throws NetworkError("BadTimeGrid") when the multiples do not hold.
  void check() const;

  int steps_per_toll() const;  // m
  int sim_steps() const;       // T / dt, number of transitions
  int toll_steps() const;      // T / dtau, number of toll decisions
  int sim_points() const { return sim_steps() + 1; }    // |T|
  int toll_points() const { return toll_steps() + 1; }  // |T_tau|
};

/// Trapezoidal flow-density relation for a whole link (capacity and jam
/// density already multiplied by the lane count). Speeds in mph, densities in
/// veh/mi, flows in veh/hr.
struct FundamentalDiagram {
  double free_speed = 55.0;
  double capacity = 2200.0;
  double backwave_speed = 55.0 / 3.0;
  double jam_density = 265.0;

  double critical_density() const { return capacity / free_speed; }
  double flow(double density) const;
  /// flow/density, equal to free_speed at zero density, floored at `crawl`.
  double speed(double density, double crawl) const;
  /// Largest density whose speed is still at least `speed_limit`.
  double density_at_speed(double speed_limit) const;
  bool is_valid() const;
};

enum class LinkKind { gpl, ml, on_ramp, off_ramp, source_connector, sink_connector };

std::string to_string(LinkKind kind);
std::optional<LinkKind> parse_link_kind(const std::string& text);

/// True for the lane group a traveler is on after taking this link: on-ramps
/// and ML links are the managed side, everything else the general side.
inline bool is_managed_side(LinkKind kind) { return kind == LinkKind::ml || kind == LinkKind::on_ramp; }

struct Link {
  int tail = 0;
  int head = 0;
  double length = 0.0;  // miles
  int lanes = 1;
  LinkKind kind = LinkKind::gpl;
  FundamentalDiagram fd;
  bool tolled = false;
  bool detectored = false;
};

struct Network {
  TimeGrid grid;
  double cell_length = 0.0;  // miles; free_speed * dt
  double default_free_speed = 55.0;
  std::vector<int> nodes;
  std::vector<Link> links;
  std::vector<int> origins;
  std::vector<int> destinations;

  std::vector<int> outgoing(int node) const;
  std::vector<int> incoming(int node) const;
  /// Index of link (tail, head), or -1.
  int find_link(int tail, int head) const;
  std::vector<int> toll_links() const;
  std::vector<int> detector_links() const;
  std::vector<int> links_of_kind(LinkKind kind) const;
  bool has_node(int node) const;
  int cells_on(int link) const;
  /// Whether `target` node can be reached from `from` node.
  bool reachable(int from, int target) const;
};

// ----------------------------------------------------------------------------
// Cells

/// Six-digit style identifier: two digits tail node, two digits head node, two
/// digits 1-based cell index counted from the tail.
struct CellId {
  int tail = 0;
  int head = 0;
  int index = 1;
  std::string code() const;
  bool operator==(const CellId&) const = default;
};

struct Cell {
  CellId id;
  int link = 0;
  double length = 0.0;         // l_c, miles
  double capacity_step = 0.0;  // q_max * dt, vehicles per step
  double jam_vehicles = 0.0;   // k_jam * l_c
  double wave_ratio = 0.0;     // w / nu
};

enum class ConnectorKind { ordinary, merge, diverge };

/// Cell-to-cell connection. Merges have two upstream cells, diverges two
/// downstream cells; unused slots hold -1. `node` is -1 for connectors inside
/// a link.
struct Connector {
  ConnectorKind kind = ConnectorKind::ordinary;
  std::array<int, 2> up{-1, -1};
  std::array<int, 2> down{-1, -1};
  int node = -1;
  std::array<int, 2> up_links{-1, -1};
  std::array<int, 2> down_links{-1, -1};
  int diverge_index = -1;
};

/// Origin point queue feeding the first cell of the origin's outgoing link.
struct Source {
  int origin = 0;
  int link = 0;
  int cell = 0;
};

/// Last cell of a link that ends at a destination; discharges freely.
struct Sink {
  int destination = 0;
  int link = 0;
  int cell = 0;
};

struct CellGraph {
  double dt = 0.0;  // seconds
  double cell_length = 0.0;
  std::vector<Cell> cells;
  std::vector<int> link_first_cell;
  std::vector<int> link_cell_count;
  std::vector<FundamentalDiagram> link_fd;
  std::vector<LinkKind> link_kind;
  std::vector<Connector> connectors;
  std::vector<Source> sources;
  std::vector<Sink> sinks;
  std::vector<int> diverge_nodes;

  int count(ConnectorKind kind) const;
  int diverge_index_of(int node) const;
};

/// Splits every link into cells of length free_speed * dt and wires the
/// connectors. Throws NetworkError("NonIntegralLength") or
/// NetworkError("DegreeViolation").
CellGraph build_cells(const Network& network, const TimeGrid& grid);

/// Toll link index -> ML link indices it controls, following the ML from the
/// toll link until the next merge or diverge. Throws
/// NetworkError("UnreachableMlLink") when the sets do not cover every ML link.
std::map<int, std::vector<int>> ml_partition(const Network& network);

struct Diagnostic {
  std::string kind;
  std::string message;
};

/// Structural checks; returns an empty list for a usable network.
std::vector<Diagnostic> validate(const Network& network);

// ----------------------------------------------------------------------------
// Network file

struct FdDefaults {
  double free_speed = 55.0;         // mph
  double capacity_per_lane = 2200;  // vphpl
  double jam_density_per_lane = 265;
  double speed_ratio = 3.0;  // nu / w
};

/// Parses the sectioned text format ([grid], [defaults], [nodes], [links],
/// [origins], [destinations]). Throws NetworkError("Parse") on syntax errors.
Network parse_network(const std::string& text);
Network load_network(const std::string& path);

}  // namespace tollrl
