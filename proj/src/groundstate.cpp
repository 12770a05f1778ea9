#include "xxz/groundstate.hpp"

#include <cmath>

#include "xxz/error.hpp"
#include "xxz/model.hpp"
#include "xxz/tebd.hpp"

namespace xxz {

double chain_energy(const MpsState& state, double hopping, double u) {
  const Eigen::Matrix4cd h = two_site_term(hopping, u);
  const LocalExpectations e = local_expectations(state, pauli::z(), std::span(&h, 1));
  double energy = 0.0;
  for (const cplx& v : e.two_site) energy += v.real();
  return energy;
}

GroundStateResult find_ground_state(int n_sys, double hopping, double u_sys, const TruncParams& trunc,
                                    double tol, const GroundStateOptions& options) {
  if (n_sys < 2) throw InvalidInput("ground state needs n_sys >= 2");
  if (n_sys % 2 != 0 && !options.allow_odd) throw InvalidInput("odd n_sys rejected; set allow_odd to override");
  if (!(hopping > 0.0)) throw InvalidInput("hopping must be positive");
  if (!(tol > 0.0)) throw InvalidInput("tolerance must be positive");
  if (options.dbeta_ladder.empty()) throw InvalidInput("empty imaginary-time ladder");
  trunc.validate();

  std::vector<Spin> neel;
  for (int i = 0; i < n_sys; ++i) neel.push_back(i % 2 == 0 ? Spin::up : Spin::down);
  MpsState state = product_state(neel);
  const BondCouplings couplings = uniform_couplings(n_sys, hopping, u_sys);

  GroundStateResult result{state, 0.0, false, 0, 0.0, true, {}};
  double energy = chain_energy(state, hopping, u_sys);
  std::vector<double> ladder = options.dbeta_ladder;
  bool extended = false;
  bool all_converged = true;
  for (std::size_t rung = 0; rung < ladder.size(); ++rung) {
    const double dbeta = ladder[rung];
    if (!(dbeta > 0.0)) throw InvalidInput("imaginary time steps must be positive");
    const GateSchedule schedule = trotter_schedule(couplings, dbeta, TimeMode::imaginary);
    bool plateau = false;
    int steps = 0;
    while (steps < options.max_steps_per_rung) {
      apply_trotter_step(state, schedule, trunc);
      ++steps;
      ++result.iterations;
      const double next = chain_energy(state, hopping, u_sys);
      const double change = next - energy;
      if (change > 1e-12) result.monotone = false;
      result.variance_estimate = std::max(0.0, -change / (2.0 * dbeta));
      energy = next;
      if (std::abs(change) < tol) {
        plateau = true;
        break;
      }
    }
    all_converged = all_converged && plateau;
    result.rung_energies.push_back(energy);
    const bool last = rung + 1 == ladder.size();
    if (last && plateau && !extended && steps <= options.early_plateau_steps && options.extra_rung > 0.0) {
      ladder.push_back(options.extra_rung);
      extended = true;
    }
  }
  result.state = std::move(state);
  result.energy = energy;
  result.converged = all_converged;
  return result;
}

}  // namespace xxz
