#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tollrl/ctm.hpp"
#include "tollrl/demand.hpp"
#include "tollrl/netmodel.hpp"

namespace tollrl {

enum class ChoiceModel { binary_logit, decision_route };

std::string to_string(ChoiceModel model);
std::optional<ChoiceModel> parse_choice_model(const std::string& text);

struct ChoiceSpec {
  ChoiceModel model = ChoiceModel::binary_logit;
  double logit_scale = 6.0;  // 1/$
  void check() const;
};

struct Route {
  std::vector<int> links;
  std::vector<int> tolls;  // positions in the toll vector, one per tolled link on the route
  int terminal = -1;
};

/// Route choice data for one diverge and one destination.
struct DivergeChoice {
  std::array<bool, 2> reachable{false, false};
  std::array<std::vector<Route>, 2> routes;  // by branch
  int terminal = -1;
};

struct DivergeRoutes {
  int node = -1;
  std::array<int, 2> branch_links{-1, -1};
  int managed_branch = -1;  // -1 when both branches stay on the same lane group
  int general_branch = 0;
  std::vector<DivergeChoice> by_destination;  // indexed like ClassTable::destinations
};

struct RouteTable {
  ChoiceSpec spec;
  std::vector<int> toll_links;
  std::vector<DivergeRoutes> diverges;  // indexed like CellGraph::diverge_nodes
};

/// Node where decision routes leaving `diverge` are truncated: the first merge
/// after the ML exit reached by following the managed branch, or `dest` when
/// that merge is not on the way to `dest`.
int decision_terminal(const Network& network, int diverge, int dest);

/// All acyclic routes from `diverge` to its decision terminal for `dest`.
/// Throws SimulationError("NoRouteToDestination").
std::vector<Route> enumerate_decision_routes(const Network& network, int diverge, int dest);

/// The two logit routes (one per branch, indexed like the diverge's outgoing
/// links) that stay on their lane group until forced off it. A branch that
/// cannot reach `dest` yields an empty route.
std::array<Route, 2> logit_routes(const Network& network, int diverge, int dest);

RouteTable build_route_table(const Network& network, const CellGraph& graph, const std::vector<int>& destinations,
                             const ChoiceSpec& spec);

/// Generalized cost in dollars: tolls on the route plus vot times travel time.
double route_utility(const Route& route, std::span<const double> tolls, std::span<const double> link_times,
                     double vot);
double route_utility(const CellGraph& graph, const Route& route, std::span<const double> tolls,
                     const CellState& state, double vot, double crawl_speed = 1.0);

/// Probability of the managed branch under the binary logit on costs.
double logit_managed_probability(double u_managed, double u_general, double scale);

/// Fills `out` with per-(diverge, class) branch fractions.
void compute_splits(const RouteTable& table, const ClassTable& classes, std::span<const double> tolls,
                    std::span<const double> link_times, Splits& out);
Splits compute_splits(const RouteTable& table, const ClassTable& classes, std::span<const double> tolls,
                      std::span<const double> link_times);

}  // namespace tollrl
