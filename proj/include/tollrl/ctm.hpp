#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "tollrl/netmodel.hpp"

namespace tollrl {

/// Per-cell per-class vehicle counts x_c^z(t) plus the origin point queues.
/// Storage is cell-major: occupancy[c * n_classes + z].
struct CellState {
  int n_classes = 0;
  int sim_step = 0;
  std::vector<double> occupancy;
  std::vector<double> queue;  // [source * n_classes + z]

  static CellState empty(const CellGraph& graph, int n_classes);

  double at(int cell, int cls) const { return occupancy[static_cast<size_t>(cell) * n_classes + cls]; }
  double& at(int cell, int cls) { return occupancy[static_cast<size_t>(cell) * n_classes + cls]; }
  double cell_total(int cell) const;
  double link_total(const CellGraph& graph, int link) const;
  double cells_total() const;
  double queue_total() const;
  /// Vehicles of class z in cells and queues.
  double class_total(int cls) const;
};

/// Fraction of each class sent to each branch of each diverge,
/// fractions[diverge * n_classes + z] = {branch 0, branch 1}.
struct Splits {
  int n_classes = 0;
  std::vector<std::array<double, 2>> fractions;

  static Splits all_to(const CellGraph& graph, int n_classes, int branch);
  std::array<double, 2>& at(int diverge, int cls) { return fractions[static_cast<size_t>(diverge) * n_classes + cls]; }
  const std::array<double, 2>& at(int diverge, int cls) const {
    return fractions[static_cast<size_t>(diverge) * n_classes + cls];
  }
};

/// Flows moved during one step. Boundary flows use link -1 on the open side
/// (origin queue upstream, destination downstream).
struct FlowRecord {
  struct Pair {
    int from_link = -1;
    int to_link = -1;
  };
  int n_classes = 0;
  std::vector<Pair> pairs;
  std::vector<double> total;
  std::vector<double> per_class;    // [pair * n_classes + z]
  std::vector<double> link_inflow;  // vehicles entering each link
  std::vector<double> exited;       // per class
  std::vector<double> injected;     // per class, added to origin queues

  /// Total flow from link `from` into link `to` (0 if no such connector).
  double flow(int from, int to) const;
};

/// Daganzo sending flow: min(n, q_max * dt).
double sending(const Cell& cell, double occupancy);
/// Daganzo receiving flow: min(q_max * dt, (w / nu) (N - n)), floored at 0.
double receiving(const Cell& cell, double occupancy);

/// Advances one step. `inflows` holds vehicles per (source, class) added to
/// the origin queues before they discharge. Throws
/// SimulationError("SplitSumViolation") for malformed splits.
void step(const CellGraph& graph, const CellState& in, const Splits& splits, std::span<const double> inflows,
          CellState& out, FlowRecord& record);

std::pair<CellState, FlowRecord> step(const CellGraph& graph, const CellState& in, const Splits& splits,
                                      std::span<const double> inflows);

/// Hours to traverse a sequence of links at the speeds implied by the current
/// cell densities, speeds floored at `crawl_speed` mph.
double instantaneous_travel_time(const CellGraph& graph, std::span<const int> route_links, const CellState& state,
                                 double crawl_speed = 1.0);
std::vector<double> link_travel_times(const CellGraph& graph, const CellState& state, double crawl_speed = 1.0);

}  // namespace tollrl
