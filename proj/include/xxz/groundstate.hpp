#pragma once

#include <vector>

#include "xxz/mps.hpp"

namespace xxz {

struct GroundStateOptions {
  std::vector<double> dbeta_ladder{0.1, 0.01, 0.001};
  // Appended once when the last rung reaches its plateau within
  // early_plateau_steps steps.
  double extra_rung = 1e-4;
  int early_plateau_steps = 3;
  int max_steps_per_rung = 20000;
  bool allow_odd = false;
};

struct GroundStateResult {
  MpsState state;
  double energy = 0.0;
  bool converged = false;
  int iterations = 0;
  // -dE/(2 dβ) over the final step, an estimate of <H²> - <H>².
  double variance_estimate = 0.0;
  // False if any step raised the energy by more than 1e-12.
  bool monotone = true;
  std::vector<double> rung_energies;
};

// Imaginary-time TEBD from the Néel state on an open XXZ chain of n_sys
// sites; each rung stops once the energy changes by less than tol per step.
GroundStateResult find_ground_state(int n_sys, double hopping, double u_sys, const TruncParams& trunc,
                                    double tol = 1e-10, const GroundStateOptions& options = {});

// Sum of two-site energies of a uniform chain.
double chain_energy(const MpsState& state, double hopping, double u);

}  // namespace xxz
