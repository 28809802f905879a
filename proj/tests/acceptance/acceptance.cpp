// Acceptance run: one PASS/FAIL line per criterion. Training-based criteria
// take most of the time (roughly half an hour on one core).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "tollrl/config.hpp"
#include "tollrl/csv.hpp"
#include "tollrl/ctm.hpp"
#include "tollrl/experiments.hpp"
#include "tollrl/heuristic.hpp"
#include "tollrl/rl.hpp"
#include "tollrl/rng.hpp"

namespace fs = std::filesystem;
using namespace tollrl;

namespace {

// Tolerances and thresholds, fixed here.
constexpr double kConservationTol = 1e-9;
constexpr double kScalarCtmTol = 1e-9;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFdStep = 1e-6;
constexpr double kGradDenomFloor = 1e-6;
constexpr double kGaeTol = 1e-10;
constexpr double kPpoIdentityTol = 1e-12;
constexpr double kRevenueGrowth = 1.5;
constexpr double kTsttDrop = 0.10;
constexpr double kCompareRatio = 0.98;
constexpr double kJointTol = 1e-9;
constexpr double kThresholdShare = 0.5;
constexpr int kTrendWindow = 10;
constexpr int kTrendIterations = 100;
constexpr double kConservationBudgetSec = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string src_path(const std::string& rel) { return std::string(TOLLRL_SOURCE_DIR) + "/" + rel; }

struct Context {
  fs::path out;
  int jobs = 1;
  std::ostringstream report;  // numbers behind every verdict, saved next to the curves
};

Context* ctx = nullptr;

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

ExperimentConfig config(const std::string& name) {
  ExperimentConfig cfg = load_config(src_path("configs/" + name + ".json"));
  cfg.jobs = cfg.trainer.jobs = ctx->jobs;
  cfg.out_dir = (ctx->out / name).string();
  return cfg;
}

// ---------------------------------------------------------------------------
// 1. conservation over random-toll episodes, driving the cell model directly

Outcome conservation() {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0, most_negative = 0.0;
  int episodes = 0;
  for (const char* name : {"sese_revmax", "dese_revmax", "lbj_revmax"}) {
    ExperimentConfig cfg = config(name);
    auto sc = build_scenario(cfg);
    const CellGraph& g = sc->graph;
    const int nz = sc->n_classes();
    const int m = sc->network.grid.steps_per_toll();
    for (int ep = 0; ep < 50; ++ep, ++episodes) {
      auto demand_rng = make_rng(cfg.seed, ep, Stream::demand);
      auto toll_rng = make_rng(cfg.seed, ep, Stream::tolls);
      std::uniform_real_distribution<double> u(cfg.env.beta_min, cfg.env.beta_max);
      CellState st = CellState::empty(g, nz), next;
      FlowRecord rec;
      Splits splits;
      std::vector<double> tolls(sc->toll_links.size()), inflows(g.sources.size() * nz);
      std::vector<double> injected(nz, 0.0), exited(nz, 0.0);
      for (int t = 0; t < sc->network.grid.sim_steps(); ++t) {
        if (t % m == 0)
          for (double& b : tolls) b = u(toll_rng);
        std::fill(inflows.begin(), inflows.end(), 0.0);
        for (size_t src = 0; src < sc->source_pairs.size(); ++src)
          for (auto [pair, di] : sc->source_pairs[src]) {
            auto by_vot = sample_inflow(sc->demand, sc->vot, demand_rng, g.sources[src].origin,
                                        sc->demand.pairs[pair].destination, t, g.dt);
            for (size_t v = 0; v < by_vot.size(); ++v)
              inflows[src * nz + sc->classes.index(static_cast<int>(v), di)] += by_vot[v];
          }
        compute_splits(sc->routes, sc->classes, tolls, link_travel_times(g, st, cfg.env.crawl_speed), splits);
        step(g, st, splits, inflows, next, rec);
        std::swap(st, next);
        for (int z = 0; z < nz; ++z) {
          injected[z] += rec.injected[z];
          exited[z] += rec.exited[z];
          worst = std::max(worst, std::abs(st.class_total(z) - (injected[z] - exited[z])));
        }
        for (double x : st.occupancy) most_negative = std::min(most_negative, x);
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ctx->report << "conservation: episodes=" << episodes << " max_abs_error=" << worst
              << " min_occupancy=" << most_negative << " seconds=" << fmt(secs) << "\n";
  return {worst < kConservationTol && secs < kConservationBudgetSec,
          std::to_string(episodes) + " episodes, max error " + fmt(worst, 3) + " veh, " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 2. single-class corridor against a plain scalar cell model written here

struct ScalarCell {
  double cap, jam, ratio, n;
};

Outcome scalar_ctm() {
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (int sc = 0; sc < 20; ++sc) {
    std::uniform_int_distribution<int> n_links(2, 5), n_cells(1, 5), n_lanes(1, 4);
    std::uniform_real_distribution<double> cap(1600, 2400), jam(180, 265), ratio(2.0, 4.0);
    const int L = n_links(rng);
    std::ostringstream text;
    text << "[grid]\ndt = 6\ntoll_period = 60\nhorizon = 1200\n[nodes]\n";
    for (int i = 1; i <= L + 1; ++i) text << i << " ";
    text << "\n[origins]\n1\n[destinations]\n" << L + 1 << "\n[links]\n";
    const double dt = 6.0, cell_len = 55.0 * dt / 3600.0;
    std::vector<ScalarCell> cells;
    std::vector<std::pair<int, int>> layout;  // (link tail, cells)
    for (int i = 1; i <= L; ++i) {
      int nc = n_cells(rng), lanes = n_lanes(rng);
      double c = cap(rng), k = jam(rng), r = ratio(rng);
      text << i << " " << i + 1 << " " << nc << "c " << lanes << " gpl 0 1 capacity_per_lane=" << num(c)
           << " jam_density_per_lane=" << num(k) << " speed_ratio=" << num(r) << "\n";
      for (int j = 0; j < nc; ++j) cells.push_back({lanes * c * dt / 3600.0, lanes * k * cell_len, 1.0 / r, 0.0});
      layout.push_back({i, nc});
    }
    Network net = parse_network(text.str());
    CellGraph g = build_cells(net, net.grid);
    if (g.cells.size() != cells.size()) return {false, "cell count differs from the oracle layout"};

    // map oracle order (upstream to downstream) to library cells
    std::vector<int> index;
    for (auto [tail, nc] : layout) {
      int link = net.find_link(tail, tail + 1);
      for (int j = 0; j < nc; ++j) index.push_back(g.link_first_cell[link] + j);
    }

    CellState st = CellState::empty(g, 1), next;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (size_t i = 0; i < cells.size(); ++i) {
      cells[i].n = u01(rng) * cells[i].jam;
      st.at(index[i], 0) = cells[i].n;
    }
    double queue = 0.0;
    FlowRecord rec;
    Splits splits;
    splits.n_classes = 1;
    const size_t C = cells.size();
    for (int t = 0; t < 200; ++t) {
      double inflow = u01(rng) * 1.5 * cells[0].cap;
      std::vector<double> in{inflow};
      step(g, st, splits, in, next, rec);
      std::swap(st, next);

      std::vector<double> S(C), R(C), y(C + 1);
      for (size_t i = 0; i < C; ++i) {
        S[i] = std::min(cells[i].n, cells[i].cap);
        R[i] = std::max(0.0, std::min(cells[i].cap, cells[i].ratio * (cells[i].jam - cells[i].n)));
      }
      queue += inflow;
      y[0] = std::min(queue, R[0]);
      for (size_t i = 1; i < C; ++i) y[i] = std::min(S[i - 1], R[i]);
      y[C] = S[C - 1];
      queue -= y[0];
      for (size_t i = 0; i < C; ++i) cells[i].n += y[i] - y[i + 1];

      for (size_t i = 0; i < C; ++i) worst = std::max(worst, std::abs(cells[i].n - st.at(index[i], 0)));
      worst = std::max(worst, std::abs(queue - st.queue_total()));
    }
  }
  ctx->report << "scalar_ctm: scenarios=20 steps=200 max_abs_dev=" << worst << "\n";
  return {worst < kScalarCtmTol, "20 corridors, max deviation " + fmt(worst, 3) + " veh"};
}

// ---------------------------------------------------------------------------
// 3. analytic gradients against central differences

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradDenomFloor}); }

template <class F>
double check_grad(Eigen::VectorXd& params, const Eigen::VectorXd& grad, F&& f) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + kGradFdStep;
    double up = f();
    params[i] = keep - kGradFdStep;
    double down = f();
    params[i] = keep;
    worst = std::max(worst, rel_err(grad[i], (up - down) / (2 * kGradFdStep)));
  }
  return worst;
}

struct Instance {
  GaussianPolicy policy;
  Samples s;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 4), hid(2, 6), n(6, 14);
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.5, 3.0);
  Instance in;
  int d = dim(rng), a = std::min(dim(rng), 3), h = hid(rng), N = n(rng);
  in.policy.mlp = Mlp({d, h, h, a});
  in.policy.mlp.init(rng, 1.0);
  in.policy.sigma = pos(rng) * 0.3;
  in.policy.scale = Eigen::VectorXd(d);
  for (int i = 0; i < d; ++i) in.policy.scale[i] = pos(rng);
  Samples& s = in.s;
  s.obs = Eigen::MatrixXd(d, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < d; ++i) s.obs(i, j) = 2.0 * nrm(rng);
  Eigen::MatrixXd mu = in.policy.mean_batch(s.obs);
  s.actions = mu;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < a; ++i) s.actions(i, j) += in.policy.sigma * nrm(rng);
  s.adv = Eigen::VectorXd(N);
  s.returns = Eigen::VectorXd(N);
  for (int j = 0; j < N; ++j) {
    s.adv[j] = nrm(rng);
    s.returns[j] = 5.0 * nrm(rng);
  }
  s.n_trajectories = 1 + static_cast<int>(rng() % 3);
  // behavior log-probs offset so that some ratios land in the clipped region
  // but none sits within reach of a kink
  std::uniform_real_distribution<double> shift(-0.4, 0.4);
  Eigen::VectorXd lp = in.policy.logp_batch(s.actions, mu);
  s.logp_old = lp;
  for (int j = 0; j < N; ++j) {
    double r;
    do {
      s.logp_old[j] = lp[j] + shift(rng);
      r = std::exp(lp[j] - s.logp_old[j]);
    } while (std::abs(r - 0.8) < 1e-3 || std::abs(r - 1.2) < 1e-3);
  }
  return in;
}

Outcome gradients() {
  std::mt19937_64 rng(77);
  double w_vpg = 0, w_ppo = 0, w_val = 0;
  for (int k = 0; k < 10; ++k) {
    Instance in = random_instance(rng);
    GaussianPolicy& p = in.policy;
    Eigen::VectorXd g = vpg_surrogate(p, in.s).grad;
    w_vpg = std::max(w_vpg, check_grad(p.mlp.params(), g, [&] { return vpg_surrogate(p, in.s).value; }));
    g = ppo_surrogate(p, in.s, 0.2).grad;
    w_ppo = std::max(w_ppo, check_grad(p.mlp.params(), g, [&] { return ppo_surrogate(p, in.s, 0.2).value; }));

    Mlp value({static_cast<int>(in.s.obs.rows()), 5, 5, 1});
    value.init(rng, 1.0);
    g = value_loss(value, p.scale, in.s.obs, in.s.returns).grad;
    w_val = std::max(w_val, check_grad(value.params(), g,
                                       [&] { return value_loss(value, p.scale, in.s.obs, in.s.returns).value; }));
  }
  ctx->report << "gradients: vpg=" << w_vpg << " ppo=" << w_ppo << " value=" << w_val << "\n";
  double worst = std::max({w_vpg, w_ppo, w_val});
  return {worst < kGradRelTol,
          "max rel error vpg " + fmt(w_vpg, 2) + ", ppo " + fmt(w_ppo, 2) + ", value " + fmt(w_val, 2)};
}

// ---------------------------------------------------------------------------
// 4. GAE against the double-sum definition

Outcome gae_oracle() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 10.0);
  double worst = 0.0;
  bool exact = true;
  for (int n = 0; n < 100; ++n) {
    const int T = len(rng);
    const double gamma = unit(rng), lam = unit(rng);
    Eigen::VectorXd r(T), v(T + 1);
    for (int t = 0; t < T; ++t) r[t] = nrm(rng);
    for (int t = 0; t <= T; ++t) v[t] = nrm(rng);
    Eigen::VectorXd a = gae(r, v, GaeConfig{gamma, lam});
    for (int k = 0; k < T; ++k) {
      double brute = 0.0;
      for (int l = 0; k + l < T; ++l) {
        double delta = r[k + l] + gamma * v[k + l + 1] - v[k + l];
        brute += std::pow(gamma * lam, l) * delta;
      }
      worst = std::max(worst, std::abs(brute - a[k]));
    }
    Eigen::VectorXd a1 = gae(r, Eigen::VectorXd::Zero(T + 1), GaeConfig{1.0, 1.0});
    if (a1 != reward_to_go(r)) exact = false;
  }
  ctx->report << "gae: trajectories=100 max_abs_dev=" << worst << " rtg_exact=" << exact << "\n";
  return {worst < kGaeTol && exact,
          "max deviation " + fmt(worst, 3) + ", reward-to-go reduction " + (exact ? "exact" : "NOT exact")};
}

// ---------------------------------------------------------------------------
// 5. PPO at the behavior parameters

Outcome ppo_identity() {
  std::mt19937_64 rng(5);
  double w_ratio = 0.0, w_obj = 0.0;
  for (int k = 0; k < 10; ++k) {
    Instance in = random_instance(rng);
    in.s.logp_old = in.policy.logp_batch(in.s.actions, in.policy.mean_batch(in.s.obs));
    Eigen::VectorXd ratios = ppo_ratios(in.policy, in.s);
    w_ratio = std::max(w_ratio, (ratios.array() - 1.0).abs().maxCoeff());
    w_obj = std::max(w_obj, std::abs(ppo_surrogate(in.policy, in.s, 0.2).value - in.s.adv.mean()));
  }
  ctx->report << "ppo_identity: max|r-1|=" << w_ratio << " max|L-meanA|=" << w_obj << "\n";
  return {w_ratio <= kPpoIdentityTol && w_obj <= kPpoIdentityTol,
          "max |ratio-1| " + fmt(w_ratio, 2) + ", max |objective - mean adv| " + fmt(w_obj, 2)};
}

// ---------------------------------------------------------------------------
// Training runs shared between criteria, cached per config name.

struct Trained {
  ExperimentConfig cfg;
  std::shared_ptr<const Scenario> scenario;
  std::vector<TrainRun> runs;
};

std::map<std::string, Trained> trained;

const Trained& train_config(const std::string& name) {
  auto it = trained.find(name);
  if (it != trained.end()) return it->second;
  Trained t;
  t.cfg = config(name);
  t.scenario = build_scenario(t.cfg);
  fs::create_directories(t.cfg.out_dir);
  for (std::uint64_t seed : t.cfg.train_seeds) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig one = t.cfg;
    one.train_seeds = {seed};
    auto runs = train_all(one, t.scenario, nullptr);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  trained " << name << " seed " << seed << " (" << to_string(t.cfg.trainer.algo) << ", "
              << t.cfg.trainer.iterations << " iterations) in " << fmt(secs, 3) << " s, best objective "
              << fmt(runs[0].result.best_objective, 6) << "\n";
    std::ofstream curve(fs::path(t.cfg.out_dir) / ("curve_seed" + std::to_string(seed) + ".csv"));
    write_curve_csv(curve, runs[0].result.curve);
    save_policy((fs::path(t.cfg.out_dir) / ("policy_seed" + std::to_string(seed) + ".txt")).string(),
                runs[0].result.best);
    t.runs.push_back(std::move(runs[0]));
  }
  return trained.emplace(name, std::move(t)).first->second;
}

// Seed-averaged mean of `field` over iterations [from, to).
double window_mean(const Trained& t, double CurveRow::*field, int from, int to) {
  double sum = 0.0;
  int n = 0;
  for (const auto& run : t.runs)
    for (int i = from; i < to; ++i, ++n) sum += run.result.curve.at(i).*field;
  return sum / n;
}

struct Trend {
  double first, last;
  std::vector<double> per_seed;  // last / first
};

Trend trend(const Trained& t, double CurveRow::*field) {
  Trend tr;
  tr.first = window_mean(t, field, 0, kTrendWindow);
  tr.last = window_mean(t, field, kTrendIterations - kTrendWindow, kTrendIterations);
  for (const auto& run : t.runs) {
    double f = 0, l = 0;
    for (int i = 0; i < kTrendWindow; ++i) {
      f += run.result.curve.at(i).*field;
      l += run.result.curve.at(kTrendIterations - kTrendWindow + i).*field;
    }
    tr.per_seed.push_back(l / f);
  }
  return tr;
}

std::string per_seed(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : "/") + fmt(x, 3);
  return out;
}

// 6. revenue growth, VPG and PPO
Outcome learning_trend() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"sese_vpg_revmax", "sese_revmax"}) {
    const Trained& t = train_config(name);
    if (t.runs.size() < 3 || t.cfg.trainer.iterations < kTrendIterations)
      return {false, std::string(name) + " needs 3 seeds and 100 iterations"};
    Trend tr = trend(t, &CurveRow::mean_revenue);
    double ratio = tr.last / tr.first;
    pass = pass && ratio >= kRevenueGrowth;
    ctx->report << "learning_trend " << name << ": first10=" << tr.first << " last10=" << tr.last << " ratio=" << ratio
                << " per_seed=" << per_seed(tr.per_seed) << "\n";
    detail += std::string(detail.empty() ? "" : "; ") + to_string(t.cfg.trainer.algo) + " revenue " +
              fmt(tr.first) + " -> " + fmt(tr.last) + " (x" + fmt(ratio, 3) + ", seeds " + per_seed(tr.per_seed) +
              ")";
  }
  return {pass, detail};
}

// 7. TSTT reduction
Outcome tstt_trend() {
  const Trained& t = train_config("sese_tsttmin");
  if (t.runs.size() < 3) return {false, "needs 3 seeds"};
  Trend tr = trend(t, &CurveRow::mean_tstt);
  double drop = 1.0 - tr.last / tr.first;
  ctx->report << "tstt_trend: first10=" << tr.first << " last10=" << tr.last << " drop=" << drop
              << " per_seed=" << per_seed(tr.per_seed) << "\n";
  return {drop >= kTsttDrop, "TSTT " + fmt(tr.first) + " -> " + fmt(tr.last) + " veh-h (" + fmt(100 * drop, 3) +
                                 "% lower, per-seed ratios " + per_seed(tr.per_seed) + ")"};
}

// 8. heuristic sweep on LBJ
Outcome sweep_trend() {
  ExperimentConfig cfg = config("lbj_revmax");
  auto sc = build_scenario(cfg);
  if (cfg.sweep.etas.size() != 5 || cfg.sweep.gains.size() != 5) return {false, "sweep grid is not 5x5"};
  auto rows = sweep(sc, cfg.env, cfg.sweep.etas, cfg.sweep.gains, cfg.sweep.seeds, cfg.seed, cfg.jobs, cfg.sweep.base);
  fs::create_directories(cfg.out_dir);
  std::ofstream f(fs::path(cfg.out_dir) / "sweep.csv");
  write_sweep_csv(f, rows);
  auto best_rev = std::max_element(rows.begin(), rows.end(),
                                   [](const SweepRow& a, const SweepRow& b) { return a.mean_rev < b.mean_rev; });
  auto best_tstt = std::min_element(rows.begin(), rows.end(),
                                    [](const SweepRow& a, const SweepRow& b) { return a.mean_tstt < b.mean_tstt; });
  double eta_min = *std::min_element(cfg.sweep.etas.begin(), cfg.sweep.etas.end());
  bool pass = best_rev->eta == eta_min && best_tstt->eta > best_rev->eta;
  ctx->report << "sweep_trend: rev_max=" << best_rev->mean_rev << " at eta=" << best_rev->eta << " p=" << best_rev->p
              << "; tstt_min=" << best_tstt->mean_tstt << " at eta=" << best_tstt->eta << " p=" << best_tstt->p
              << "\n";
  return {pass, "max revenue " + fmt(best_rev->mean_rev) + " at eta " + fmt(best_rev->eta) + ", min TSTT " +
                    fmt(best_tstt->mean_tstt) + " at eta " + fmt(best_tstt->eta)};
}

const TrainRun& best_run(const Trained& t) {
  return *std::max_element(t.runs.begin(), t.runs.end(), [](const TrainRun& a, const TrainRun& b) {
    return a.result.best_objective < b.result.best_objective;
  });
}

// 9. DRL vs best heuristic
Outcome comparison() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"sese_revmax", "lbj_revmax"}) {
    const Trained& t = train_config(name);
    const TrainRun& best = best_run(t);
    auto rows = compare(t.cfg, t.scenario, best.result.best);
    std::ofstream f(fs::path(t.cfg.out_dir) / "compare.csv");
    write_compare_csv(f, rows);
    double drl = rows[0].stats.revenue.mean, heur = rows[1].stats.revenue.mean;
    double ratio = drl / heur;
    bool ok = ratio >= kCompareRatio && rows[0].stats.n >= 30 && rows[1].stats.n >= 30;
    pass = pass && ok;
    ctx->report << "comparison " << name << ": seed=" << best.seed << " drl=" << drl << " heuristic=" << heur
                << " (eta=" << rows[1].eta << " p=" << rows[1].p << ") ratio=" << ratio
                << " episodes=" << rows[0].stats.n << "\n";
    detail += std::string(detail.empty() ? "" : "; ") + name + " DRL " + fmt(drl) + " vs heuristic " + fmt(heur) +
              " (x" + fmt(ratio, 3) + ")";
  }
  return {pass, detail};
}

// 10. JAH statistics over random profiles on LBJ
Outcome jah_validity() {
  ExperimentConfig cfg = config("lbj_revmax");
  auto sc = build_scenario(cfg);
  auto stats = random_profiles(sc, cfg.env, 200, cfg.seed, cfg.jobs);
  double mr = 0, mj = 0;
  bool bounds = true;
  for (const auto& s : stats) {
    mr += s.revenue / stats.size();
    mj += s.jah2 / stats.size();
    bounds = bounds && s.jah2 >= -1.0 && s.jah2 <= 1.0 && s.pct_violation >= 0.0 && s.pct_violation <= 100.0;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& s : stats) {
    sxy += (s.revenue - mr) * (s.jah2 - mj);
    sxx += (s.revenue - mr) * (s.revenue - mr);
    syy += (s.jah2 - mj) * (s.jah2 - mj);
  }
  double corr = sxy / std::sqrt(sxx * syy);
  fs::create_directories(cfg.out_dir);
  std::ofstream f(fs::path(cfg.out_dir) / "random_profiles.csv");
  write_stats_csv(f, stats);
  ctx->report << "jah_validity: n=200 corr(revenue,jah2)=" << corr << " bounds_ok=" << bounds << "\n";
  return {corr > 0.0 && bounds, "corr(revenue, JAH2) " + fmt(corr, 3) + ", bounds " + (bounds ? "hold" : "VIOLATED")};
}

// 11. joint reward bookkeeping
Outcome joint_reward() {
  ExperimentConfig cfg = config("sese_joint");
  auto sc = build_scenario(cfg);
  const double lambda = cfg.env.reward.lambda;
  auto stats = run_episodes(
      sc, cfg.env, [&](std::uint64_t ep) { return random_rule(cfg.env, cfg.seed, ep); }, 20, cfg.seed, 0, cfg.jobs);
  double worst = 0.0;
  for (const auto& s : stats) worst = std::max(worst, std::abs(s.objective - (lambda * s.revenue - s.tstt)));
  ctx->report << "joint_reward: lambda=" << lambda << " episodes=20 max_abs_dev=" << worst << "\n";
  return {cfg.env.reward.kind == RewardSpec::Kind::joint && worst <= kJointTol,
          "lambda " + fmt(lambda) + ", max deviation " + fmt(worst, 3)};
}

// 12. threshold penalty keeps JAH1 down
Outcome threshold() {
  const Trained& t = train_config("lbj_threshold");
  if (!t.cfg.env.reward.threshold) return {false, "config has no threshold"};
  const double limit = t.cfg.env.reward.threshold->jah1;
  int below = 0;
  std::string per;
  for (const auto& run : t.runs) {
    auto stats = run_episodes(
        t.scenario, t.cfg.env,
        [&](std::uint64_t ep) { return policy_rule(run.result.best, ActionMode::mean, t.cfg.seed, ep); },
        t.cfg.compare.episodes, t.cfg.seed, kEvalOffset, t.cfg.jobs);
    StatsSummary s = summarize_stats(stats);
    below += s.jah1.mean < limit;
    per += (per.empty() ? "" : "/") + fmt(s.jah1.mean);
    ctx->report << "threshold seed " << run.seed << ": mean_jah1=" << s.jah1.mean << " revenue=" << s.revenue.mean
                << " best_iteration=" << run.result.best_iteration << "\n";
  }
  const int n = static_cast<int>(t.runs.size());
  std::string detail =
      std::to_string(below) + "/" + std::to_string(n) + " seeds below " + fmt(limit) + " (mean JAH1 " + per + ")";
  // reference only: the unconstrained policy, when criterion 9 already trained it
  if (auto it = trained.find("lbj_revmax"); it != trained.end()) {
    const Trained& free = it->second;
    auto stats = run_episodes(
        free.scenario, free.cfg.env,
        [&](std::uint64_t ep) { return policy_rule(best_run(free).result.best, ActionMode::mean, t.cfg.seed, ep); },
        t.cfg.compare.episodes, t.cfg.seed, kEvalOffset, t.cfg.jobs);
    double j = summarize_stats(stats).jah1.mean;
    ctx->report << "threshold reference: unconstrained mean_jah1=" << j << "\n";
    detail += "; unconstrained policy " + fmt(j);
  }
  return {n >= 6 && below >= kThresholdShare * n, detail};
}

// 13. determinism of every command
std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream f(e.path());
    std::stringstream ss;
    ss << f.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  struct Job {
    std::string config, command, patch;
  };
  const std::vector<Job> jobs{
      {"sese_revmax", "simulate", R"({"simulate": {"episodes": 3}})"},
      {"sese_revmax", "train", R"({"trainer": {"iterations": 2, "episodes_per_iter": 2, "seeds": [1, 2]}})"},
      {"sese_revmax", "compare",
       R"({"heuristic": {"eta": [0.2, 0.6], "p": [0.1], "seeds": 2}, "compare": {"episodes": 3}})"},
      {"lbj_revmax", "sweep-heuristic", R"({"heuristic": {"eta": [0.2, 1.0], "p": [0.01, 0.1], "seeds": 2}})"},
      {"lbj_revmax", "random-profiles", R"({"random_profiles": 20})"},
      {"lbj_revmax", "train", R"({"trainer": {"iterations": 1, "episodes_per_iter": 2, "seeds": [1]}})"},
      {"lbj_transfer_demand1", "eval-transfer", R"({"transfer": {"runs": 3}})"},
  };
  int files = 0;
  std::vector<std::string> differing;
  for (const char* run : {"a", "b"}) {
    for (const auto& job : jobs) {
      ExperimentConfig cfg = patch_config(load_config(src_path("configs/" + job.config + ".json")), job.patch);
      if (job.command == "eval-transfer") {
        // patch_config leaves the transfer block alone, so set it here
        cfg.transfer.runs = 3;
        cfg.transfer.checkpoint = (ctx->out / "determinism" / run / "lbj_revmax" / "policy_best.txt").string();
      }
      cfg.out_dir = (ctx->out / "determinism" / run / job.config).string();
      // the second pass uses more threads; results must not depend on it
      cfg.jobs = cfg.trainer.jobs = run[0] == 'a' ? 1 : 3;
      std::ostringstream log;
      if (run_command(job.command, cfg, log) != 0) return {false, job.command + " failed: " + log.str()};
    }
  }
  for (const char* dir : {"sese_revmax", "lbj_revmax", "lbj_transfer_demand1"}) {
    auto a = read_dir(ctx->out / "determinism" / "a" / dir);
    auto b = read_dir(ctx->out / "determinism" / "b" / dir);
    for (const auto& [name, body] : a) {
      ++files;
      auto it = b.find(name);
      auto strip = [](const std::string& s) { return s.substr(s.find('\n') + 1); };
      if (it == b.end() || strip(it->second) != strip(body)) differing.push_back(std::string(dir) + "/" + name);
    }
    if (a.size() != b.size()) differing.push_back(std::string(dir) + " (file sets differ)");
  }
  ctx->report << "determinism: files=" << files << " differing=" << differing.size() << "\n";
  std::string detail = std::to_string(files) + " artifacts from " + std::to_string(jobs.size()) + " commands, ";
  detail += differing.empty() ? "all bodies identical" : std::to_string(differing.size()) + " differ: " + differing[0];
  return {differing.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tollrl acceptance criteria"};
  std::vector<int> only;
  std::string out = "acceptance_out";
  int jobs = 1;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--out", out, "Directory for curves, policies and the report");
  app.add_option("--jobs", jobs, "Worker threads for rollouts")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  Context c;
  c.out = out;
  c.jobs = jobs;
  ctx = &c;
  fs::create_directories(c.out);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"conservation", conservation},   {"scalar CTM oracle", scalar_ctm},
      {"gradient checks", gradients},   {"GAE oracle", gae_oracle},
      {"PPO identity", ppo_identity},   {"learning trend", learning_trend},
      {"TSTT trend", tstt_trend},       {"heuristic sweep trend", sweep_trend},
      {"comparison direction", comparison}, {"JAH validity", jah_validity},
      {"joint reward", joint_reward},   {"threshold penalization", threshold},
      {"determinism", determinism},
  };
  std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  std::ostringstream lines;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << "criterion " << (id < 10 ? " " : "") << id << " " << (o.pass ? "PASS" : "FAIL") << "  "
         << criteria[i].first << ": " << o.detail << " [" << fmt(secs, 3) << " s]";
    std::cout << line.str() << std::endl;
    lines << line.str() << "\n";
    failed += !o.pass;
  }
  std::ofstream(c.out / "acceptance.txt") << lines.str() << "\n" << c.report.str();
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
