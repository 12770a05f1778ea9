#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xxz/model.hpp"
#include "xxz/mps.hpp"
#include "xxz/trajectory.hpp"

namespace xxz {

// X⊗Y − Y⊗X; the spin current on a bond is 2J times its expectation.
Eigen::Matrix4cd current_operator();

// Spin current on 1-based bond i (sites i, i+1), 1 <= i <= L-1.
double current(const MpsState& state, const ChainSpec& spec, int bond);

struct Profiles {
  std::vector<double> z;         // per site
  std::vector<double> currents;  // per bond, currents[b] on 1-based bond b+1
};
Profiles measure_profiles(const MpsState& state, double hopping);

// Bond carrying the midsection current: n_bath + floor(n_sys / 2), 1-based.
int mid_bond(const ChainSpec& spec);

struct CurrentSeries {
  std::vector<double> times;
  std::vector<double> q_junction;
  std::vector<double> q_mid;
  std::vector<double> delta_z;
};

// Cumulative trapezoidal integral of q over times, starting at 0.
std::vector<double> transferred_magnetization(std::span<const double> times, std::span<const double> q);
CurrentSeries current_series(const Trajectory& traj, const ChainSpec& spec);
void write_current_series_csv(std::ostream& out, const CurrentSeries& series);

// residual(k, i) = d<Z_i>/dt − (Q_{i−1} − Q_i) at interior record k+1, with zero
// flux through the chain ends. On uniformly spaced records the derivative
// uses fourth-order five-point stencils (central in the interior, shifted at
// the first and last interior records); otherwise three-point central.
Eigen::MatrixXd continuity_residual(const Trajectory& traj);

}  // namespace xxz
