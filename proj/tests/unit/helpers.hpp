#pragma once

#include <string>

#include "tollrl/config.hpp"

namespace testing {

inline std::string data(const std::string& rel) { return std::string(TOLLRL_DATA_DIR) + "/" + rel; }
inline std::string configs(const std::string& rel) { return std::string(TOLLRL_DATA_DIR) + "/../configs/" + rel; }

// Small corridor with one priced on-ramp and a GPL lane drop, used where the bundled networks are
// too slow or too large.
inline const char* kTinyNet = R"(
[grid]
dt = 6
toll_period = 60
horizon = 600
[nodes]
1 2 3 4 5 6
[origins]
1
[destinations]
5
[links]
1 2 2c 3 gpl     0 1
2 4 1c 1 on_ramp 1 0
4 3 6c 1 ml      0 1
2 6 4c 3 gpl     0 1
6 3 3c 2 gpl     0 1
3 5 2c 3 gpl     0 0
)";

// more than the two-lane GPL section carries
inline const char* kTinyDemand = "origin,destination,start_s,end_s,mean_vph\n1,5,0,600,6000\n";
inline const char* kTinyVot = "vot,share\n10,0.5\n30,0.5\n";

}  // namespace testing

#include "tollrl/scenario.hpp"

namespace testing {

inline std::shared_ptr<const tollrl::Scenario> tiny_scenario(
    tollrl::ChoiceModel model = tollrl::ChoiceModel::decision_route) {
  tollrl::ScenarioOptions opt;
  opt.choice.model = model;
  return tollrl::make_scenario(tollrl::parse_network(kTinyNet), tollrl::parse_demand(kTinyDemand, 200.0),
                               tollrl::parse_vot(kTinyVot), opt);
}

}  // namespace testing
