#include "tollrl/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

#include "tollrl/errors.hpp"

namespace tollrl {

namespace {

// Returns n when value / unit is within rel_tol of an integer n >= 1, else -1.
long integral_ratio(double value, double unit, double rel_tol) {
  if (unit <= 0.0 || value <= 0.0) return -1;
  double ratio = value / unit;
  double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > rel_tol * n) return -1;
  return static_cast<long>(n);
}

std::string link_name(const Link& link) {
  return "(" + std::to_string(link.tail) + "," + std::to_string(link.head) + ")";
}

}  // namespace

// ---------------------------------------------------------------- TimeGrid

void TimeGrid::check() const {
  if (!(dt > 0.0)) throw NetworkError("BadTimeGrid", "dt must be positive");
  if (integral_ratio(toll_period, dt, 1e-9) < 0)
    throw NetworkError("BadTimeGrid", "toll_period must be a positive multiple of dt");
  if (integral_ratio(horizon, toll_period, 1e-9) < 0)
    throw NetworkError("BadTimeGrid", "horizon must be a positive multiple of toll_period");
}

int TimeGrid::steps_per_toll() const { return static_cast<int>(std::lround(toll_period / dt)); }
int TimeGrid::sim_steps() const { return static_cast<int>(std::lround(horizon / dt)); }
int TimeGrid::toll_steps() const { return static_cast<int>(std::lround(horizon / toll_period)); }

// ---------------------------------------------------------------- FD

double FundamentalDiagram::flow(double k) const {
  if (k <= 0.0) return 0.0;
  double f = std::min({free_speed * k, capacity, backwave_speed * (jam_density - k)});
  return std::max(f, 0.0);
}

double FundamentalDiagram::speed(double k, double crawl) const {
  if (k <= 0.0) return free_speed;
  return std::max(flow(k) / k, crawl);
}

double FundamentalDiagram::density_at_speed(double v) const {
  if (v <= 0.0) return jam_density;
  if (v > free_speed) return 0.0;
  return std::min(capacity / v, backwave_speed * jam_density / (backwave_speed + v));
}

bool FundamentalDiagram::is_valid() const {
  return free_speed > 0 && capacity > 0 && backwave_speed > 0 && backwave_speed <= free_speed &&
         critical_density() < jam_density;
}

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::gpl: return "GPL";
    case LinkKind::ml: return "ML";
    case LinkKind::on_ramp: return "on_ramp";
    case LinkKind::off_ramp: return "off_ramp";
    case LinkKind::source_connector: return "source_connector";
    case LinkKind::sink_connector: return "sink_connector";
  }
  return "?";
}

std::optional<LinkKind> parse_link_kind(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "gpl") return LinkKind::gpl;
  if (t == "ml") return LinkKind::ml;
  if (t == "on_ramp" || t == "onramp") return LinkKind::on_ramp;
  if (t == "off_ramp" || t == "offramp") return LinkKind::off_ramp;
  if (t == "source_connector" || t == "source") return LinkKind::source_connector;
  if (t == "sink_connector" || t == "sink") return LinkKind::sink_connector;
  return std::nullopt;
}

// ---------------------------------------------------------------- Network

std::vector<int> Network::outgoing(int node) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].tail == node) out.push_back(i);
  return out;
}

std::vector<int> Network::incoming(int node) const {
  std::vector<int> in;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].head == node) in.push_back(i);
  return in;
}

int Network::find_link(int tail, int head) const {
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].tail == tail && links[i].head == head) return i;
  return -1;
}

std::vector<int> Network::toll_links() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].tolled) out.push_back(i);
  return out;
}

std::vector<int> Network::detector_links() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].detectored) out.push_back(i);
  return out;
}

std::vector<int> Network::links_of_kind(LinkKind kind) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].kind == kind) out.push_back(i);
  return out;
}

bool Network::has_node(int node) const { return std::find(nodes.begin(), nodes.end(), node) != nodes.end(); }

int Network::cells_on(int link) const {
  return static_cast<int>(integral_ratio(links.at(link).length, cell_length, 1e-9));
}

bool Network::reachable(int from, int target) const {
  if (from == target) return true;
  std::set<int> seen{from};
  std::deque<int> queue{from};
  while (!queue.empty()) {
    int n = queue.front();
    queue.pop_front();
    for (const Link& l : links) {
      if (l.tail != n || seen.count(l.head)) continue;
      if (l.head == target) return true;
      seen.insert(l.head);
      queue.push_back(l.head);
    }
  }
  return false;
}

// ---------------------------------------------------------------- cells

std::string CellId::code() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%02d%02d%02d", tail, head, index);
  return buf;
}

int CellGraph::count(ConnectorKind kind) const {
  return static_cast<int>(std::count_if(connectors.begin(), connectors.end(),
                                        [kind](const Connector& c) { return c.kind == kind; }));
}

int CellGraph::diverge_index_of(int node) const {
  auto it = std::find(diverge_nodes.begin(), diverge_nodes.end(), node);
  return it == diverge_nodes.end() ? -1 : static_cast<int>(it - diverge_nodes.begin());
}

CellGraph build_cells(const Network& network, const TimeGrid& grid) {
  grid.check();
  CellGraph g;
  g.dt = grid.dt;
  g.cell_length = network.cell_length;
  if (!(g.cell_length > 0.0)) throw NetworkError("BadTimeGrid", "cell length must be positive");

  const int n_links = static_cast<int>(network.links.size());
  g.link_first_cell.resize(n_links);
  g.link_cell_count.resize(n_links);
  for (int i = 0; i < n_links; ++i) {
    const Link& link = network.links[i];
    long n = integral_ratio(link.length, g.cell_length, 1e-9);
    if (n < 0)
      throw NetworkError("NonIntegralLength", "link " + link_name(link) + " length " +
                                                  std::to_string(link.length) +
                                                  " mi is not a multiple of the cell length");
    g.link_first_cell[i] = static_cast<int>(g.cells.size());
    g.link_cell_count[i] = static_cast<int>(n);
    g.link_fd.push_back(link.fd);
    g.link_kind.push_back(link.kind);
    for (long c = 0; c < n; ++c) {
      Cell cell;
      cell.id = CellId{link.tail, link.head, static_cast<int>(c + 1)};
      cell.link = i;
      cell.length = g.cell_length;
      cell.capacity_step = link.fd.capacity * grid.dt / 3600.0;
      cell.jam_vehicles = link.fd.jam_density * g.cell_length;
      cell.wave_ratio = link.fd.backwave_speed / link.fd.free_speed;
      g.cells.push_back(cell);
    }
    for (long c = 0; c + 1 < n; ++c) {
      Connector con;
      con.up[0] = g.link_first_cell[i] + static_cast<int>(c);
      con.down[0] = con.up[0] + 1;
      con.up_links[0] = con.down_links[0] = i;
      g.connectors.push_back(con);
    }
  }
  auto last_cell = [&](int link) { return g.link_first_cell[link] + g.link_cell_count[link] - 1; };

  std::set<int> origins(network.origins.begin(), network.origins.end());
  std::set<int> destinations(network.destinations.begin(), network.destinations.end());
  for (int node : network.nodes) {
    std::vector<int> in = network.incoming(node);
    std::vector<int> out = network.outgoing(node);
    if (in.size() > 2 || out.size() > 2)
      throw NetworkError("DegreeViolation", "node " + std::to_string(node) + " has in-degree " +
                                                std::to_string(in.size()) + ", out-degree " +
                                                std::to_string(out.size()));
    if (in.empty() && out.empty()) continue;
    if (in.empty()) {
      if (!origins.count(node) || out.size() != 1)
        throw NetworkError("DegreeViolation", "node " + std::to_string(node) +
                                                  " has no inflow and is not a single-link origin");
      g.sources.push_back(Source{node, out[0], g.link_first_cell[out[0]]});
      continue;
    }
    if (out.empty()) {
      if (!destinations.count(node))
        throw NetworkError("DegreeViolation", "node " + std::to_string(node) + " is a dead end");
      for (int l : in) g.sinks.push_back(Sink{node, l, last_cell(l)});
      continue;
    }
    if (in.size() == 2 && out.size() == 2)
      throw NetworkError("DegreeViolation",
                         "node " + std::to_string(node) + " is both a merge and a diverge");
    Connector con;
    con.node = node;
    for (size_t k = 0; k < in.size(); ++k) {
      con.up[k] = last_cell(in[k]);
      con.up_links[k] = in[k];
    }
    for (size_t k = 0; k < out.size(); ++k) {
      con.down[k] = g.link_first_cell[out[k]];
      con.down_links[k] = out[k];
    }
    if (in.size() == 2) {
      con.kind = ConnectorKind::merge;
    } else if (out.size() == 2) {
      con.kind = ConnectorKind::diverge;
      con.diverge_index = static_cast<int>(g.diverge_nodes.size());
      g.diverge_nodes.push_back(node);
    }
    g.connectors.push_back(con);
  }
  return g;
}

// ---------------------------------------------------------------- ML sets

std::map<int, std::vector<int>> ml_partition(const Network& network) {
  std::map<int, std::vector<int>> sets;
  auto ml_out = [&](int node) {
    for (int l : network.outgoing(node))
      if (network.links[l].kind == LinkKind::ml) return l;
    return -1;
  };
  for (int toll : network.toll_links()) {
    std::vector<int>& set = sets[toll];
    const Link& tl = network.links[toll];
    if (tl.kind == LinkKind::ml) set.push_back(toll);
    int node = tl.head;
    int next = ml_out(node);
    if (tl.kind != LinkKind::ml) {
      // Entering the ML: take the first ML link unless it carries its own toll.
      if (next < 0 || network.links[next].tolled) continue;
      set.push_back(next);
      node = network.links[next].head;
      next = ml_out(node);
    }
    // Continue through plain ML nodes; stop at the next merge or diverge.
    while (next >= 0 && !network.links[next].tolled && network.incoming(node).size() == 1 &&
           network.outgoing(node).size() == 1) {
      set.push_back(next);
      node = network.links[next].head;
      next = ml_out(node);
    }
  }
  std::set<int> covered;
  for (const auto& [toll, set] : sets)
    for (int l : set)
      if (!covered.insert(l).second)
        throw NetworkError("OverlappingMlSets", "ML link " + link_name(network.links[l]) +
                                                    " is controlled by two toll links");
  for (int l : network.links_of_kind(LinkKind::ml))
    if (!covered.count(l))
      throw NetworkError("UnreachableMlLink",
                         "ML link " + link_name(network.links[l]) + " belongs to no toll link");
  return sets;
}

// ---------------------------------------------------------------- validate

std::vector<Diagnostic> validate(const Network& network) {
  std::vector<Diagnostic> out;
  auto add = [&out](std::string kind, std::string msg) { out.push_back({std::move(kind), std::move(msg)}); };

  try {
    network.grid.check();
  } catch (const NetworkError& e) {
    add("BadTimeGrid", e.what());
  }

  std::set<int> nodes(network.nodes.begin(), network.nodes.end());
  std::set<int> origins(network.origins.begin(), network.origins.end());
  std::set<int> destinations(network.destinations.begin(), network.destinations.end());
  std::set<std::pair<int, int>> seen_links;

  for (const Link& link : network.links) {
    std::string name = link_name(link);
    if (!nodes.count(link.tail) || !nodes.count(link.head)) add("UnknownNode", "link " + name);
    if (!seen_links.insert({link.tail, link.head}).second) add("DuplicateLink", "link " + name);
    if (link.lanes < 1) add("BadLanes", "link " + name);
    if (!link.fd.is_valid()) add("BadFundamentalDiagram", "link " + name);
    if (std::abs(link.fd.free_speed - network.default_free_speed) > 1e-9)
      add("CellLengthMismatch", "link " + name + " free speed differs from the network-wide value");
    if (integral_ratio(link.length, network.cell_length, 1e-9) < 0)
      add("NonIntegralLength", "link " + name + " length is not a multiple of the cell length");
    if (link.tolled && link.kind != LinkKind::on_ramp && link.kind != LinkKind::ml)
      add("TollPlacement", "tolled link " + name + " must be an on-ramp or ML link");
  }

  auto touches_ml = [&](int node) {
    for (const Link& l : network.links)
      if ((l.tail == node || l.head == node) && l.kind == LinkKind::ml) return true;
    return false;
  };
  auto touches_gpl = [&](int node) {
    for (const Link& l : network.links)
      if ((l.tail == node || l.head == node) && l.kind == LinkKind::gpl) return true;
    return false;
  };

  for (int node : network.nodes) {
    auto in = network.incoming(node);
    auto out = network.outgoing(node);
    std::string n = std::to_string(node);
    if (in.size() > 2 || out.size() > 2) add("DegreeViolation", "node " + n);
    if (in.size() == 2 && out.size() == 2) add("DegreeViolation", "node " + n + " is both a merge and a diverge");
    if (in.empty() && !out.empty() && !origins.count(node)) add("DanglingNode", "node " + n + " has no inflow");
    if (out.empty() && !in.empty() && !destinations.count(node)) add("DanglingNode", "node " + n + " is a dead end");
    if (in.empty() && out.empty()) add("IsolatedNode", "node " + n);
    if (out.size() == 2) {
      bool a = is_managed_side(network.links[out[0]].kind);
      bool b = is_managed_side(network.links[out[1]].kind);
      if (a == b) {
        // Same lane group on both branches is allowed only when no destination
        // can be reached through both (a pure exit diverge).
        for (int d : network.destinations)
          if (network.reachable(network.links[out[0]].head, d) &&
              network.reachable(network.links[out[1]].head, d))
            add("AmbiguousDiverge", "node " + n + " offers two same-lane-group routes to " +
                                        std::to_string(d));
      }
    }
  }

  for (int o : network.origins) {
    std::string n = std::to_string(o);
    if (!nodes.count(o)) {
      add("UnknownNode", "origin " + n);
      continue;
    }
    auto in = network.incoming(o);
    auto out = network.outgoing(o);
    if (!in.empty() || out.size() != 1) {
      add("OriginShape", "origin " + n + " needs exactly one outgoing link and no incoming links");
      continue;
    }
    const Link& l = network.links[out[0]];
    bool ok = l.kind == LinkKind::gpl ||
              (l.kind == LinkKind::source_connector && touches_gpl(l.head) && !touches_ml(l.head));
    if (!ok) add("A1Violation", "origin " + n + " does not attach to a GPL node");
  }
  for (int d : network.destinations) {
    std::string n = std::to_string(d);
    if (!nodes.count(d)) {
      add("UnknownNode", "destination " + n);
      continue;
    }
    if (!network.outgoing(d).empty()) add("DestinationShape", "destination " + n + " has outgoing links");
    for (int li : network.incoming(d)) {
      const Link& l = network.links[li];
      bool ok = l.kind == LinkKind::gpl ||
                (l.kind == LinkKind::sink_connector && touches_gpl(l.tail) && !touches_ml(l.tail));
      if (!ok) add("A1Violation", "destination " + n + " does not attach to a GPL node");
    }
  }

  // Every destination reachable from every origin using GPL-side links only.
  for (int o : network.origins) {
    for (int d : network.destinations) {
      std::set<int> seen{o};
      std::deque<int> queue{o};
      bool found = false;
      while (!queue.empty() && !found) {
        int n = queue.front();
        queue.pop_front();
        for (const Link& l : network.links) {
          if (l.tail != n || is_managed_side(l.kind) || l.kind == LinkKind::off_ramp) continue;
          if (l.head == d) found = true;
          if (seen.insert(l.head).second) queue.push_back(l.head);
        }
      }
      if (!found)
        add("GplReachability", "destination " + std::to_string(d) + " unreachable from origin " +
                                   std::to_string(o) + " on GPL links");
    }
  }

  if (!network.toll_links().empty()) {
    try {
      ml_partition(network);
    } catch (const NetworkError& e) {
      add(e.kind(), e.what());
    }
  }
  return out;
}

}  // namespace tollrl
