#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tollrl {

struct VotClass {
  double vot = 0.0;    // $/hr
  double share = 0.0;  // p_v
};

/// Discrete value-of-time distribution shared by every OD pair.
struct VotDistribution {
  std::vector<VotClass> classes;
  /// Throws DemandError("BadVot") unless shares sum to 1 and every vot > 0.
  void check() const;
};

/// Piecewise-constant mean demand of one OD pair.
struct OdDemand {
  int origin = 0;
  int destination = 0;
  struct Segment {
    double start = 0.0;  // seconds, inclusive
    double end = 0.0;    // seconds, exclusive
    double mean_vph = 0.0;
  };
  std::vector<Segment> segments;
};

struct DemandProfile {
  std::vector<OdDemand> pairs;
  double sigma_d = 0.0;  // veh/hr

  /// Index of the (origin, destination) pair or -1.
  int find(int origin, int destination) const;
  /// Mean demand in veh/hr at simulation time `seconds`; overlapping rows add.
  double mean(int pair, double seconds) const;
  /// Sum of means over the steps of the horizon, in vehicles.
  double total_mean_vehicles(double dt, int steps) const;
  void check() const;
};

/// Vehicle class z = (vot, destination).
struct VehicleClass {
  int vot_index = 0;
  double vot = 0.0;
  int destination_index = 0;
  int destination = 0;
};

struct ClassTable {
  std::vector<VehicleClass> entries;
  std::vector<double> vots;
  std::vector<int> destinations;

  int size() const { return static_cast<int>(entries.size()); }
  int index(int vot_index, int destination_index) const {
    return vot_index * static_cast<int>(destinations.size()) + destination_index;
  }
  int destination_index(int destination) const;
};

/// Cross product of VOT classes and destinations, VOT-major.
ClassTable build_class_table(const VotDistribution& vot, const std::vector<int>& destinations);

/// Vehicles entering during sim step `step` for OD (r, s), split across VOT
/// classes by share (entry i belongs to VOT class i). The total is a
/// rectified Normal(d_rs(t), sigma_d) draw converted from veh/hr to vehicles
/// per step. Throws DemandError("UnknownOdPair").
std::vector<double> sample_inflow(const DemandProfile& profile, const VotDistribution& vot, std::mt19937_64& rng,
                                  int origin, int destination, int step, double dt);

/// CSV loaders: demand rows (origin, destination, start_s, end_s, mean_vph),
/// VOT rows (vot_dollars_per_hr, share). A header line and '#' comments are
/// skipped.
DemandProfile load_demand(const std::string& path, double sigma_d);
DemandProfile parse_demand(const std::string& text, double sigma_d);
VotDistribution load_vot(const std::string& path);
VotDistribution parse_vot(const std::string& text);

}  // namespace tollrl
