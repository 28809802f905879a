#include "tollrl/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tollrl/errors.hpp"

namespace tollrl {

void VotDistribution::check() const {
  if (classes.empty()) throw DemandError("BadVot", "empty VOT distribution");
  double total = 0.0;
  for (const auto& c : classes) {
    if (!(c.vot > 0.0)) throw DemandError("BadVot", "VOT values must be positive");
    if (c.share < 0.0) throw DemandError("BadVot", "negative share");
    total += c.share;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DemandError("BadVot", "shares sum to " + std::to_string(total));
}

int DemandProfile::find(int origin, int destination) const {
  for (int i = 0; i < static_cast<int>(pairs.size()); ++i)
    if (pairs[i].origin == origin && pairs[i].destination == destination) return i;
  return -1;
}

double DemandProfile::mean(int pair, double seconds) const {
  double total = 0.0;
  for (const auto& seg : pairs.at(pair).segments)
    if (seconds >= seg.start && seconds < seg.end) total += seg.mean_vph;
  return total;
}

double DemandProfile::total_mean_vehicles(double dt, int steps) const {
  double total = 0.0;
  for (int p = 0; p < static_cast<int>(pairs.size()); ++p)
    for (int t = 0; t < steps; ++t) total += mean(p, t * dt) * dt / 3600.0;
  return total;
}

void DemandProfile::check() const {
  if (sigma_d < 0.0) throw DemandError("BadDemand", "sigma_d must be nonnegative");
  for (const auto& p : pairs)
    for (const auto& s : p.segments)
      if (s.mean_vph < 0.0 || s.end < s.start) throw DemandError("BadDemand", "negative mean or empty interval");
}

int ClassTable::destination_index(int destination) const {
  auto it = std::find(destinations.begin(), destinations.end(), destination);
  return it == destinations.end() ? -1 : static_cast<int>(it - destinations.begin());
}

ClassTable build_class_table(const VotDistribution& vot, const std::vector<int>& destinations) {
  ClassTable table;
  table.destinations = destinations;
  for (const auto& c : vot.classes) table.vots.push_back(c.vot);
  for (int v = 0; v < static_cast<int>(vot.classes.size()); ++v)
    for (int d = 0; d < static_cast<int>(destinations.size()); ++d)
      table.entries.push_back(VehicleClass{v, vot.classes[v].vot, d, destinations[d]});
  return table;
}

std::vector<double> sample_inflow(const DemandProfile& profile, const VotDistribution& vot, std::mt19937_64& rng,
                                  int origin, int destination, int step, double dt) {
  int pair = profile.find(origin, destination);
  if (pair < 0)
    throw DemandError("UnknownOdPair", std::to_string(origin) + "->" + std::to_string(destination));
  double mean = profile.mean(pair, step * dt);
  double draw = mean;
  if (profile.sigma_d > 0.0) {
    std::normal_distribution<double> normal(mean, profile.sigma_d);
    draw = normal(rng);
  }
  double vehicles = std::max(draw, 0.0) * dt / 3600.0;
  std::vector<double> out(vot.classes.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = vehicles * vot.classes[i].share;
  return out;
}

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      size_t b = cell.find_first_not_of(" \t\r");
      size_t e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (cells.empty() || (cells.size() == 1 && cells[0].empty())) continue;
    rows.push_back(std::move(cells));
  }
  return rows;
}

bool numeric(const std::string& s) {
  try {
    size_t pos = 0;
    std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DemandError("Io", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

DemandProfile parse_demand(const std::string& text, double sigma_d) {
  DemandProfile profile;
  profile.sigma_d = sigma_d;
  for (const auto& row : csv_rows(text)) {
    if (!numeric(row[0])) continue;  // header
    if (row.size() < 5) throw DemandError("Parse", "demand rows need origin,destination,start_s,end_s,mean_vph");
    int o = std::stoi(row[0]);
    int d = std::stoi(row[1]);
    int idx = profile.find(o, d);
    if (idx < 0) {
      profile.pairs.push_back(OdDemand{o, d, {}});
      idx = static_cast<int>(profile.pairs.size()) - 1;
    }
    profile.pairs[idx].segments.push_back({std::stod(row[2]), std::stod(row[3]), std::stod(row[4])});
  }
  profile.check();
  return profile;
}

DemandProfile load_demand(const std::string& path, double sigma_d) { return parse_demand(slurp(path), sigma_d); }

VotDistribution parse_vot(const std::string& text) {
  VotDistribution vot;
  for (const auto& row : csv_rows(text)) {
    if (!numeric(row[0])) continue;
    if (row.size() < 2) throw DemandError("Parse", "VOT rows need vot,share");
    vot.classes.push_back({std::stod(row[0]), std::stod(row[1])});
  }
  vot.check();
  return vot;
}

VotDistribution load_vot(const std::string& path) { return parse_vot(slurp(path)); }

}  // namespace tollrl
