#include "tollrl/lanechoice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tollrl/errors.hpp"

namespace tollrl {

std::string to_string(ChoiceModel model) {
  return model == ChoiceModel::binary_logit ? "binary_logit" : "decision_route";
}

std::optional<ChoiceModel> parse_choice_model(const std::string& text) {
  if (text == "binary_logit" || text == "logit") return ChoiceModel::binary_logit;
  if (text == "decision_route") return ChoiceModel::decision_route;
  return std::nullopt;
}

void ChoiceSpec::check() const {
  if (model == ChoiceModel::binary_logit && !(logit_scale > 0.0))
    throw ConfigError("ConfigInvalid", "logit_scale must be positive");
}

namespace {

std::array<int, 2> diverge_branches(const Network& net, int node) {
  auto out = net.outgoing(node);
  if (out.size() != 2)
    throw SimulationError("NotADiverge", "node " + std::to_string(node) + " does not have two outgoing links");
  return {out[0], out[1]};
}

bool reaches(const Network& net, int link, int dest) {
  return net.links[link].head == dest || net.reachable(net.links[link].head, dest);
}

void attach_tolls(const Network& net, const std::vector<int>& toll_links, Route& r) {
  r.tolls.clear();
  for (int l : r.links) {
    if (!net.links[l].tolled) continue;
    auto it = std::find(toll_links.begin(), toll_links.end(), l);
    r.tolls.push_back(static_cast<int>(it - toll_links.begin()));
  }
}

void dfs_routes(const Network& net, int node, int target, std::vector<int>& path, std::set<int>& on_path,
                std::vector<Route>& out) {
  if (node == target) {
    Route r;
    r.links = path;
    r.terminal = target;
    out.push_back(std::move(r));
    return;
  }
  for (int l : net.outgoing(node)) {
    int next = net.links[l].head;
    if (on_path.count(next)) continue;
    path.push_back(l);
    on_path.insert(next);
    dfs_routes(net, next, target, path, on_path, out);
    on_path.erase(next);
    path.pop_back();
  }
}

}  // namespace

int decision_terminal(const Network& net, int diverge, int dest) {
  auto br = diverge_branches(net, diverge);
  int managed = -1;
  for (int l : br)
    if (is_managed_side(net.links[l].kind)) managed = l;
  if (managed < 0) return dest;

  int node = net.links[managed].head;
  bool exited = false;
  int terminal = -1;
  std::set<int> seen{diverge};
  while (seen.insert(node).second) {
    auto in = net.incoming(node);
    auto out = net.outgoing(node);
    if (out.empty()) {
      terminal = node;
      break;
    }
    if (in.size() >= 2) {
      bool rejoins = std::any_of(in.begin(), in.end(), [&](int l) { return net.links[l].kind == LinkKind::gpl; });
      if (exited || rejoins) {
        terminal = node;
        break;
      }
    }
    int next = out[0];
    if (out.size() == 2) {
      auto off = std::find_if(out.begin(), out.end(), [&](int l) { return net.links[l].kind == LinkKind::off_ramp; });
      if (off != out.end()) {
        next = *off;
      } else {
        for (int l : out)
          if (is_managed_side(net.links[l].kind) == !exited) next = l;
      }
    }
    if (!is_managed_side(net.links[next].kind)) exited = true;
    node = net.links[next].head;
  }
  if (terminal < 0 || terminal == dest) return dest;
  if (!net.reachable(terminal, dest)) return dest;
  for (int l : br)
    if (reaches(net, l, dest) && !reaches(net, l, terminal)) return dest;
  return terminal;
}

std::vector<Route> enumerate_decision_routes(const Network& net, int diverge, int dest) {
  int target = decision_terminal(net, diverge, dest);
  std::vector<Route> out;
  std::vector<int> path;
  std::set<int> on_path{diverge};
  dfs_routes(net, diverge, target, path, on_path, out);
  if (out.empty())
    throw SimulationError("NoRouteToDestination",
                          "no route from node " + std::to_string(diverge) + " to " + std::to_string(dest));
  return out;
}

std::array<Route, 2> logit_routes(const Network& net, int diverge, int dest) {
  auto br = diverge_branches(net, diverge);
  std::array<Route, 2> routes;
  for (int b = 0; b < 2; ++b) {
    if (!reaches(net, br[b], dest)) continue;
    Route& r = routes[b];
    r.terminal = dest;
    r.links.push_back(br[b]);
    bool managed = is_managed_side(net.links[br[b]].kind);
    int node = net.links[br[b]].head;
    while (node != dest) {
      std::vector<int> options;
      for (int l : net.outgoing(node))
        if (reaches(net, l, dest)) options.push_back(l);
      if (options.empty() || r.links.size() > net.links.size())
        throw SimulationError("NoRouteToDestination", "logit route from node " + std::to_string(diverge) +
                                                          " cannot reach " + std::to_string(dest));
      int next = options[0];
      for (int l : options)
        if (is_managed_side(net.links[l].kind) == managed) {
          next = l;
          break;
        }
      r.links.push_back(next);
      managed = is_managed_side(net.links[next].kind);
      node = net.links[next].head;
    }
  }
  return routes;
}

RouteTable build_route_table(const Network& net, const CellGraph& graph, const std::vector<int>& destinations,
                             const ChoiceSpec& spec) {
  spec.check();
  RouteTable table;
  table.spec = spec;
  table.toll_links = net.toll_links();
  for (int node : graph.diverge_nodes) {
    DivergeRoutes dr;
    dr.node = node;
    dr.branch_links = diverge_branches(net, node);
    bool m0 = is_managed_side(net.links[dr.branch_links[0]].kind);
    bool m1 = is_managed_side(net.links[dr.branch_links[1]].kind);
    if (m0 != m1) {
      dr.managed_branch = m0 ? 0 : 1;
      dr.general_branch = 1 - dr.managed_branch;
    }
    for (int dest : destinations) {
      DivergeChoice dc;
      for (int b = 0; b < 2; ++b) dc.reachable[b] = reaches(net, dr.branch_links[b], dest);
      if (dc.reachable[0] && dc.reachable[1]) {
        if (spec.model == ChoiceModel::binary_logit) {
          auto pair = logit_routes(net, node, dest);
          dc.terminal = dest;
          for (int b = 0; b < 2; ++b) dc.routes[b].push_back(std::move(pair[b]));
        } else {
          dc.terminal = decision_terminal(net, node, dest);
          for (Route& r : enumerate_decision_routes(net, node, dest)) {
            int b = r.links.front() == dr.branch_links[0] ? 0 : 1;
            dc.routes[b].push_back(std::move(r));
          }
        }
        for (auto& rs : dc.routes)
          for (Route& r : rs) attach_tolls(net, table.toll_links, r);
        if (dc.routes[0].empty() || dc.routes[1].empty())
          throw SimulationError("NoRouteToDestination", "diverge " + std::to_string(node) +
                                                            " lacks a route on one branch to " + std::to_string(dest));
      }
      dr.by_destination.push_back(std::move(dc));
    }
    table.diverges.push_back(std::move(dr));
  }
  return table;
}

double route_utility(const Route& route, std::span<const double> tolls, std::span<const double> link_times,
                     double vot) {
  double toll = 0.0, time = 0.0;
  for (int t : route.tolls) toll += tolls[t];
  for (int l : route.links) time += link_times[l];
  return toll + vot * time;
}

double route_utility(const CellGraph& graph, const Route& route, std::span<const double> tolls,
                     const CellState& state, double vot, double crawl_speed) {
  double toll = 0.0;
  for (int t : route.tolls) toll += tolls[t];
  return toll + vot * instantaneous_travel_time(graph, route.links, state, crawl_speed);
}

double logit_managed_probability(double u_managed, double u_general, double scale) {
  // Written on the difference so that large utility gaps saturate cleanly.
  return 1.0 / (1.0 + std::exp(scale * (u_managed - u_general)));
}

void compute_splits(const RouteTable& table, const ClassTable& classes, std::span<const double> tolls,
                    std::span<const double> link_times, Splits& out) {
  const int nz = classes.size();
  out.n_classes = nz;
  out.fractions.assign(table.diverges.size() * static_cast<size_t>(nz), {1.0, 0.0});
  const double inf = std::numeric_limits<double>::infinity();
  for (size_t d = 0; d < table.diverges.size(); ++d) {
    const DivergeRoutes& dr = table.diverges[d];
    for (size_t di = 0; di < dr.by_destination.size(); ++di) {
      const DivergeChoice& dc = dr.by_destination[di];
      int forced = -1;
      if (dc.reachable[0] != dc.reachable[1]) forced = dc.reachable[0] ? 0 : 1;
      if (!dc.reachable[0] && !dc.reachable[1]) forced = dr.general_branch;

      // Toll sum and travel time of each route do not depend on the VOT class.
      std::array<std::vector<std::pair<double, double>>, 2> parts;
      if (forced < 0)
        for (int b = 0; b < 2; ++b)
          for (const Route& r : dc.routes[b]) {
            double toll = 0.0, time = 0.0;
            for (int t : r.tolls) toll += tolls[t];
            for (int l : r.links) time += link_times[l];
            parts[b].push_back({toll, time});
          }

      int gen = dr.general_branch;
      int man = dr.managed_branch >= 0 ? dr.managed_branch : 1 - gen;
      for (int v = 0; v < static_cast<int>(classes.vots.size()); ++v) {
        int z = classes.index(v, static_cast<int>(di));
        auto& f = out.at(static_cast<int>(d), z);
        if (forced >= 0) {
          f = {forced == 0 ? 1.0 : 0.0, forced == 0 ? 0.0 : 1.0};
          continue;
        }
        double vot = classes.vots[v];
        std::array<double, 2> best{inf, inf};
        for (int b = 0; b < 2; ++b)
          for (const auto& [toll, time] : parts[b]) best[b] = std::min(best[b], toll + vot * time);
        double p_man;
        if (table.spec.model == ChoiceModel::decision_route)
          p_man = best[man] < best[gen] ? 1.0 : 0.0;
        else
          p_man = logit_managed_probability(best[man], best[gen], table.spec.logit_scale);
        f[man] = p_man;
        f[gen] = 1.0 - p_man;
      }
    }
  }
}

Splits compute_splits(const RouteTable& table, const ClassTable& classes, std::span<const double> tolls,
                      std::span<const double> link_times) {
  Splits s;
  compute_splits(table, classes, tolls, link_times, s);
  return s;
}

}  // namespace tollrl
