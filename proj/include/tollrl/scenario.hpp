#pragma once

#include <map>
#include <memory>
#include <vector>

#include "tollrl/demand.hpp"
#include "tollrl/lanechoice.hpp"
#include "tollrl/netmodel.hpp"

namespace tollrl {

/// Everything an episode needs that does not change during it. Built once and
/// shared read-only between parallel rollouts.
struct Scenario {
  Network network;
  CellGraph graph;
  DemandProfile demand;
  VotDistribution vot;
  ClassTable classes;
  RouteTable routes;
  std::map<int, std::vector<int>> ml_sets;  // toll link -> ML links it controls
  std::vector<int> toll_links;
  std::vector<int> observed_links;
  std::vector<double> observed_jam;  // jam vehicles on each observed link

  // Demand injection: for each source, (pair index, destination index).
  std::vector<std::vector<std::pair<int, int>>> source_pairs;

  std::vector<int> gpl_cells;  // cells on links of kind GPL
  std::vector<int> ml_cells;   // cells on links of kind ML
  double gpl_jam = 0.0;        // sum of cell jam vehicles
  double ml_jam = 0.0;

  int n_classes() const { return classes.size(); }
  int action_dim() const { return static_cast<int>(toll_links.size()); }
};

struct ScenarioOptions {
  ChoiceSpec choice;
  // Empty means every link flagged as detectored.
  std::vector<std::pair<int, int>> observed_links;
};

/// Validates the network and demand and precomputes cells, classes, routes and
/// ML sets. Throws NetworkError, DemandError or ConfigError.
std::shared_ptr<const Scenario> make_scenario(Network network, DemandProfile demand, VotDistribution vot,
                                              const ScenarioOptions& options);

}  // namespace tollrl
