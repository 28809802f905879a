#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "tollrl/config.hpp"
#include "tollrl/errors.hpp"
#include "tollrl/experiments.hpp"

namespace py = pybind11;
using namespace tollrl;

namespace {

// Env bound together with the scenario it simulates.
class PyEnv {
 public:
  explicit PyEnv(const std::string& config_path) : cfg_(load_config(config_path)) {
    scenario_ = build_scenario(cfg_);
    env_ = std::make_unique<Env>(scenario_, cfg_.env);
  }

  std::vector<double> reset(std::uint64_t seed) { return env_->reset(seed).counts; }

  py::tuple step(const std::vector<double>& action) {
    StepResult r = env_->step(action);
    py::dict info;
    info["tolls"] = r.info.tolls;
    info["toll_flows"] = r.info.toll_flows;
    info["revenue"] = r.info.revenue;
    info["tstt"] = r.info.tstt;
    info["penalty"] = r.info.penalty;
    return py::make_tuple(r.observation.counts, r.reward, r.done, info);
  }

  Env& env() { return *env_; }
  const Scenario& scenario() const { return *scenario_; }

 private:
  ExperimentConfig cfg_;
  std::shared_ptr<const Scenario> scenario_;
  std::unique_ptr<Env> env_;
};

int run_cli(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> jobs, std::optional<std::string> out) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = cfg.trainer.jobs = *jobs;
  if (out) cfg.out_dir = *out;
  std::ostringstream log;
  int status = run_command(command, cfg, log);
  py::print(log.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
  return status;
}

}  // namespace

PYBIND11_MODULE(_tollrl, m) {
  m.doc() = "Managed-lane toll pricing: CTM environment and experiment runner";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "TollrlError", PyExc_RuntimeError);

  py::class_<EpisodeStats>(m, "EpisodeStats")
      .def_readonly("revenue", &EpisodeStats::revenue)
      .def_readonly("tstt", &EpisodeStats::tstt)
      .def_readonly("jah1", &EpisodeStats::jah1)
      .def_readonly("jah2", &EpisodeStats::jah2)
      .def_readonly("pct_violation", &EpisodeStats::pct_violation)
      .def_readonly("throughput", &EpisodeStats::throughput)
      .def_readonly("objective", &EpisodeStats::objective)
      .def_readonly("rewards", &EpisodeStats::rewards);

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&>(), py::arg("config"))
      .def("reset", &PyEnv::reset, py::arg("seed"), "Start an episode; returns the noisy link counts.")
      .def("step", &PyEnv::step, py::arg("action"), "Returns (observation, reward, done, info).")
      .def_property_readonly("done", [](PyEnv& e) { return e.env().done(); })
      .def_property_readonly("toll_step", [](PyEnv& e) { return e.env().toll_step(); })
      .def_property_readonly("horizon", [](PyEnv& e) { return e.env().horizon(); })
      .def_property_readonly("action_dim", [](PyEnv& e) { return e.env().action_dim(); })
      .def_property_readonly("obs_dim", [](PyEnv& e) { return e.env().obs_dim(); })
      .def_property_readonly("toll_links",
                             [](PyEnv& e) {
                               std::vector<std::pair<int, int>> out;
                               for (int l : e.scenario().toll_links)
                                 out.push_back({e.scenario().network.links[l].tail, e.scenario().network.links[l].head});
                               return out;
                             })
      .def("cell_totals",
           [](PyEnv& e) {
             std::vector<double> out;
             for (int c = 0; c < static_cast<int>(e.scenario().graph.cells.size()); ++c)
               out.push_back(e.env().state().cell_total(c));
             return out;
           })
      .def("queue_total", [](PyEnv& e) { return e.env().state().queue_total(); })
      .def("stats", [](PyEnv& e) { return e.env().stats(); });

  m.def("run", &run_cli, py::arg("command"), py::arg("config"), py::arg("seed") = py::none(),
        py::arg("jobs") = py::none(), py::arg("out") = py::none(),
        "Run a tollrl subcommand; returns the exit status.");
  m.def("reward_to_go", &reward_to_go, py::arg("rewards"));
  m.def(
      "gae",
      [](const Eigen::VectorXd& r, const Eigen::VectorXd& v, double gamma, double lam) {
        return gae(r, v, GaeConfig{gamma, lam});
      },
      py::arg("rewards"), py::arg("values"), py::arg("gamma") = 0.99, py::arg("lam") = 0.97);
  m.def(
      "load_policy_sizes", [](const std::string& path) { return load_policy(path).mlp.sizes(); }, py::arg("path"),
      "Layer sizes stored in a policy checkpoint.");
}
