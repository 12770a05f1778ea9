#pragma once

#include <limits>
#include <vector>

#include "xxz/mps.hpp"

namespace xxz {

// Time-indexed observables of one run. z_profiles[k][i] is <Z_i> at times[k]
// (0-based site i); currents[k][b] is Q on 1-based bond b+1.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> z_profiles;
  std::vector<std::vector<double>> currents;
  std::vector<double> norms;
  std::vector<double> discarded_weights;  // cumulative
  std::vector<double> total_z;
  std::vector<Index> max_bonds;
  double hopping = 1.0;
  bool quality_warning = false;
  double continuity_residual_max = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return times.size(); }
  std::size_t n_sites() const { return z_profiles.empty() ? 0 : z_profiles.front().size(); }
  void validate() const;
  bool operator==(const Trajectory&) const = default;
};

}  // namespace xxz
