#include "tollrl/ctm.hpp"

#include <algorithm>
#include <cmath>

#include "tollrl/errors.hpp"

namespace tollrl {

// ---------------------------------------------------------------- state

CellState CellState::empty(const CellGraph& graph, int n_classes) {
  CellState s;
  s.n_classes = n_classes;
  s.occupancy.assign(graph.cells.size() * static_cast<size_t>(n_classes), 0.0);
  s.queue.assign(graph.sources.size() * static_cast<size_t>(n_classes), 0.0);
  return s;
}

double CellState::cell_total(int cell) const {
  const double* x = occupancy.data() + static_cast<size_t>(cell) * n_classes;
  double t = 0.0;
  for (int z = 0; z < n_classes; ++z) t += x[z];
  return t;
}

double CellState::link_total(const CellGraph& graph, int link) const {
  double t = 0.0;
  int first = graph.link_first_cell[link];
  for (int c = 0; c < graph.link_cell_count[link]; ++c) t += cell_total(first + c);
  return t;
}

double CellState::cells_total() const {
  double t = 0.0;
  for (double v : occupancy) t += v;
  return t;
}

double CellState::queue_total() const {
  double t = 0.0;
  for (double v : queue) t += v;
  return t;
}

double CellState::class_total(int cls) const {
  double t = 0.0;
  for (size_t i = cls; i < occupancy.size(); i += n_classes) t += occupancy[i];
  for (size_t i = cls; i < queue.size(); i += n_classes) t += queue[i];
  return t;
}

Splits Splits::all_to(const CellGraph& graph, int n_classes, int branch) {
  Splits s;
  s.n_classes = n_classes;
  std::array<double, 2> f{branch == 0 ? 1.0 : 0.0, branch == 0 ? 0.0 : 1.0};
  s.fractions.assign(graph.diverge_nodes.size() * static_cast<size_t>(n_classes), f);
  return s;
}

double FlowRecord::flow(int from, int to) const {
  double t = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].from_link == from && pairs[i].to_link == to) t += total[i];
  return t;
}

// ---------------------------------------------------------------- flows

double sending(const Cell& cell, double occupancy) { return std::clamp(occupancy, 0.0, cell.capacity_step); }

double receiving(const Cell& cell, double occupancy) {
  double r = std::min(cell.capacity_step, cell.wave_ratio * (cell.jam_vehicles - occupancy));
  return std::max(r, 0.0);
}

namespace {

double median3(double a, double b, double c) { return std::max(std::min(a, b), std::min(std::max(a, b), c)); }

// Fraction of a cell's content that leaves when `flow` vehicles move out of
// `total`; saturates at 1 so a fully emptied cell ends at exactly zero.
double leave_ratio(double flow, double total) {
  if (total <= 0.0 || flow <= 0.0) return 0.0;
  return flow >= total ? 1.0 : flow / total;
}

void prepare_record(const CellGraph& g, int n_classes, FlowRecord& rec) {
  rec.n_classes = n_classes;
  rec.pairs.clear();
  for (const Source& s : g.sources) rec.pairs.push_back({-1, s.link});
  for (const Connector& c : g.connectors) {
    if (c.node < 0) continue;
    for (int u = 0; u < 2; ++u)
      for (int d = 0; d < 2; ++d)
        if (c.up_links[u] >= 0 && c.down_links[d] >= 0) rec.pairs.push_back({c.up_links[u], c.down_links[d]});
  }
  for (const Sink& s : g.sinks) rec.pairs.push_back({s.link, -1});
  rec.total.assign(rec.pairs.size(), 0.0);
  rec.per_class.assign(rec.pairs.size() * static_cast<size_t>(n_classes), 0.0);
  rec.link_inflow.assign(g.link_first_cell.size(), 0.0);
  rec.exited.assign(n_classes, 0.0);
  rec.injected.assign(n_classes, 0.0);
}

}  // namespace

void step(const CellGraph& g, const CellState& in, const Splits& splits, std::span<const double> inflows,
          CellState& out, FlowRecord& rec) {
  const int nz = in.n_classes;
  const size_t n_cells = g.cells.size();
  if (inflows.size() != g.sources.size() * static_cast<size_t>(nz))
    throw SimulationError("ShapeMismatch", "inflow vector does not match sources x classes");
  if (splits.n_classes != nz || splits.fractions.size() != g.diverge_nodes.size() * static_cast<size_t>(nz))
    throw SimulationError("ShapeMismatch", "split table does not match diverges x classes");

  prepare_record(g, nz, rec);
  out.n_classes = nz;
  out.sim_step = in.sim_step + 1;
  out.occupancy = in.occupancy;
  out.queue = in.queue;

  std::vector<double> total(n_cells), send(n_cells), recv(n_cells);
  for (size_t c = 0; c < n_cells; ++c) {
    total[c] = in.cell_total(static_cast<int>(c));
    send[c] = sending(g.cells[c], total[c]);
    recv[c] = receiving(g.cells[c], total[c]);
  }

  size_t pair = 0;
  auto move = [&](int from_cell, int to_cell, int z, double f) {
    out.occupancy[static_cast<size_t>(from_cell) * nz + z] -= f;
    out.occupancy[static_cast<size_t>(to_cell) * nz + z] += f;
  };

  // Origin queues: inject, then discharge at the first cell's receiving rate.
  for (size_t s = 0; s < g.sources.size(); ++s) {
    const Source& src = g.sources[s];
    double q_total = 0.0;
    for (int z = 0; z < nz; ++z) {
      double add = inflows[s * nz + z];
      if (add < 0.0) throw SimulationError("NegativeFlow", "negative origin inflow");
      out.queue[s * nz + z] += add;
      rec.injected[z] += add;
      q_total += out.queue[s * nz + z];
    }
    double y = std::min(q_total, recv[src.cell]);
    double r = leave_ratio(y, q_total);
    double moved = 0.0;
    for (int z = 0; z < nz; ++z) {
      double& q = out.queue[s * nz + z];
      double f = r >= 1.0 ? q : r * q;
      q -= f;
      out.occupancy[static_cast<size_t>(src.cell) * nz + z] += f;
      rec.per_class[pair * nz + z] = f;
      moved += f;
    }
    rec.total[pair] = moved;
    rec.link_inflow[src.link] += moved;
    ++pair;
  }

  for (const Connector& con : g.connectors) {
    if (con.kind == ConnectorKind::ordinary) {
      int u = con.up[0], d = con.down[0];
      double y = std::min(send[u], recv[d]);
      double r = leave_ratio(y, total[u]);
      double moved = 0.0;
      const double* x = in.occupancy.data() + static_cast<size_t>(u) * nz;
      for (int z = 0; z < nz; ++z) {
        double f = r >= 1.0 ? x[z] : r * x[z];
        if (f == 0.0) continue;
        move(u, d, z, f);
        moved += f;
        if (con.node >= 0) rec.per_class[pair * nz + z] = f;
      }
      if (con.node >= 0) {
        rec.total[pair] = moved;
        rec.link_inflow[con.down_links[0]] += moved;
        ++pair;
      }
    } else if (con.kind == ConnectorKind::merge) {
      int u1 = con.up[0], u2 = con.up[1], d = con.down[0];
      double s1 = send[u1], s2 = send[u2], r = recv[d];
      double y1 = s1, y2 = s2;
      if (s1 + s2 > r) {
        double q1 = g.cells[u1].capacity_step, q2 = g.cells[u2].capacity_step;
        double p1 = q1 / (q1 + q2);
        y1 = median3(s1, r - s2, p1 * r);
        y2 = median3(s2, r - s1, (1.0 - p1) * r);
        y1 = std::max(y1, 0.0);
        y2 = std::max(y2, 0.0);
      }
      const int ups[2] = {u1, u2};
      const double ys[2] = {y1, y2};
      for (int k = 0; k < 2; ++k) {
        int u = ups[k];
        double ratio = leave_ratio(ys[k], total[u]);
        double moved = 0.0;
        const double* x = in.occupancy.data() + static_cast<size_t>(u) * nz;
        for (int z = 0; z < nz; ++z) {
          double f = ratio >= 1.0 ? x[z] : ratio * x[z];
          if (f == 0.0) continue;
          move(u, d, z, f);
          moved += f;
          rec.per_class[pair * nz + z] = f;
        }
        rec.total[pair] = moved;
        rec.link_inflow[con.down_links[0]] += moved;
        ++pair;
      }
    } else {
      int u = con.up[0], d0 = con.down[0], d1 = con.down[1];
      double ratio = total[u] > 0.0 ? send[u] / total[u] : 0.0;
      const double* x = in.occupancy.data() + static_cast<size_t>(u) * nz;
      double demand0 = 0.0, demand1 = 0.0;
      for (int z = 0; z < nz; ++z) {
        const auto& p = splits.at(con.diverge_index, z);
        if (p[0] < -1e-12 || p[1] < -1e-12 || std::abs(p[0] + p[1] - 1.0) > 1e-9)
          throw SimulationError("SplitSumViolation", "diverge at node " + std::to_string(con.node));
        double sz = ratio * x[z];
        demand0 += sz * p[0];
        demand1 += sz * p[1];
      }
      double phi = 1.0;
      if (demand0 > 0.0) phi = std::min(phi, recv[d0] / demand0);
      if (demand1 > 0.0) phi = std::min(phi, recv[d1] / demand1);
      double r = leave_ratio(phi * send[u], total[u]);
      double moved0 = 0.0, moved1 = 0.0;
      size_t pair1 = pair + 1;
      for (int z = 0; z < nz; ++z) {
        double leaving = r >= 1.0 ? x[z] : r * x[z];
        if (leaving == 0.0) continue;
        double p0 = std::clamp(splits.at(con.diverge_index, z)[0], 0.0, 1.0);
        double f0 = leaving * p0;
        double f1 = leaving - f0;
        move(u, d0, z, f0);
        move(u, d1, z, f1);
        rec.per_class[pair * nz + z] = f0;
        rec.per_class[pair1 * nz + z] = f1;
        moved0 += f0;
        moved1 += f1;
      }
      rec.total[pair] = moved0;
      rec.total[pair1] = moved1;
      rec.link_inflow[con.down_links[0]] += moved0;
      rec.link_inflow[con.down_links[1]] += moved1;
      pair += 2;
    }
  }

  for (const Sink& s : g.sinks) {
    double y = send[s.cell];
    double r = leave_ratio(y, total[s.cell]);
    double moved = 0.0;
    const double* x = in.occupancy.data() + static_cast<size_t>(s.cell) * nz;
    for (int z = 0; z < nz; ++z) {
      double f = r >= 1.0 ? x[z] : r * x[z];
      out.occupancy[static_cast<size_t>(s.cell) * nz + z] -= f;
      rec.per_class[pair * nz + z] = f;
      rec.exited[z] += f;
      moved += f;
    }
    rec.total[pair] = moved;
    ++pair;
  }
}

std::pair<CellState, FlowRecord> step(const CellGraph& graph, const CellState& in, const Splits& splits,
                                      std::span<const double> inflows) {
  std::pair<CellState, FlowRecord> result;
  step(graph, in, splits, inflows, result.first, result.second);
  return result;
}

// ---------------------------------------------------------------- travel time

std::vector<double> link_travel_times(const CellGraph& g, const CellState& state, double crawl_speed) {
  std::vector<double> times(g.link_first_cell.size(), 0.0);
  for (size_t l = 0; l < times.size(); ++l) {
    const FundamentalDiagram& fd = g.link_fd[l];
    double t = 0.0;
    int first = g.link_first_cell[l];
    for (int c = 0; c < g.link_cell_count[l]; ++c) {
      const Cell& cell = g.cells[first + c];
      double k = state.cell_total(first + c) / cell.length;
      t += cell.length / fd.speed(k, crawl_speed);
    }
    times[l] = t;
  }
  return times;
}

double instantaneous_travel_time(const CellGraph& g, std::span<const int> route_links, const CellState& state,
                                 double crawl_speed) {
  double t = 0.0;
  for (int l : route_links) {
    const FundamentalDiagram& fd = g.link_fd[l];
    int first = g.link_first_cell[l];
    for (int c = 0; c < g.link_cell_count[l]; ++c) {
      const Cell& cell = g.cells[first + c];
      t += cell.length / fd.speed(state.cell_total(first + c) / cell.length, crawl_speed);
    }
  }
  return t;
}

}  // namespace tollrl
