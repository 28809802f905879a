#include "tollrl/scenario.hpp"

#include <algorithm>
#include <set>

#include "tollrl/errors.hpp"

namespace tollrl {

std::shared_ptr<const Scenario> make_scenario(Network network, DemandProfile demand, VotDistribution vot,
                                              const ScenarioOptions& options) {
  auto diags = validate(network);
  if (!diags.empty()) {
    std::string msg;
    for (const auto& d : diags) msg += "\n  " + d.kind + ": " + d.message;
    throw NetworkError(diags.front().kind, "network failed validation:" + msg);
  }
  demand.check();
  vot.check();

  auto s = std::make_shared<Scenario>();
  s->graph = build_cells(network, network.grid);
  s->classes = build_class_table(vot, network.destinations);
  s->routes = build_route_table(network, s->graph, network.destinations, options.choice);
  s->ml_sets = network.toll_links().empty() ? std::map<int, std::vector<int>>{} : ml_partition(network);
  s->toll_links = network.toll_links();
  if (s->toll_links.empty()) throw NetworkError("NoTollLinks", "network has no tolled link");

  if (options.observed_links.empty()) {
    s->observed_links = network.detector_links();
  } else {
    for (auto [tail, head] : options.observed_links) {
      int l = network.find_link(tail, head);
      if (l < 0)
        throw ConfigError("ConfigInvalid", "observed link (" + std::to_string(tail) + "," + std::to_string(head) +
                                               ") is not in the network");
      s->observed_links.push_back(l);
    }
  }
  if (s->observed_links.empty()) throw ConfigError("ConfigInvalid", "no observed links");
  for (int l : s->observed_links) {
    double jam = 0.0;
    for (int c = 0; c < s->graph.link_cell_count[l]; ++c)
      jam += s->graph.cells[s->graph.link_first_cell[l] + c].jam_vehicles;
    s->observed_jam.push_back(jam);
  }

  std::set<std::pair<int, int>> od_seen;
  s->source_pairs.resize(s->graph.sources.size());
  for (int p = 0; p < static_cast<int>(demand.pairs.size()); ++p) {
    const OdDemand& od = demand.pairs[p];
    int di = s->classes.destination_index(od.destination);
    auto src = std::find_if(s->graph.sources.begin(), s->graph.sources.end(),
                            [&](const Source& x) { return x.origin == od.origin; });
    if (di < 0 || src == s->graph.sources.end())
      throw DemandError("UnknownOdPair", "demand row " + std::to_string(od.origin) + "->" +
                                             std::to_string(od.destination) + " does not match the network");
    if (!network.reachable(od.origin, od.destination))
      throw DemandError("UnknownOdPair", "destination unreachable for " + std::to_string(od.origin) + "->" +
                                             std::to_string(od.destination));
    s->source_pairs[src - s->graph.sources.begin()].push_back({p, di});
  }

  for (int c = 0; c < static_cast<int>(s->graph.cells.size()); ++c) {
    const Cell& cell = s->graph.cells[c];
    LinkKind k = network.links[cell.link].kind;
    if (k == LinkKind::gpl) {
      s->gpl_cells.push_back(c);
      s->gpl_jam += cell.jam_vehicles;
    } else if (k == LinkKind::ml) {
      s->ml_cells.push_back(c);
      s->ml_jam += cell.jam_vehicles;
    }
  }

  s->network = std::move(network);
  s->demand = std::move(demand);
  s->vot = std::move(vot);
  return s;
}

}  // namespace tollrl
