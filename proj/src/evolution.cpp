#include "xxz/evolution.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "xxz/error.hpp"
#include "xxz/observables.hpp"
#include "xxz/tebd.hpp"

namespace xxz {

void Trajectory::validate() const {
  const std::size_t n = times.size();
  if (z_profiles.size() != n || currents.size() != n || norms.size() != n || discarded_weights.size() != n ||
      total_z.size() != n || max_bonds.size() != n) {
    throw InvalidInput("trajectory columns differ in length");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidInput("trajectory times must be strictly increasing");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (z_profiles[k].size() != z_profiles.front().size()) throw InvalidInput("ragged magnetization profile");
    if (currents[k].size() + 1 != z_profiles[k].size()) throw InvalidInput("current profile must have L-1 bonds");
  }
}

void RunParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidInput("t_max must be positive");
  if (record_stride < 1) throw InvalidInput("record_stride must be >= 1");
  if (!(discard_alarm > 0.0)) throw InvalidInput("discard_alarm must be positive");
  trunc.validate();
}

long RunParams::n_steps() const { return static_cast<long>(std::ceil(t_max / dt - 1e-9)); }

std::pair<int, int> junction_indices(const ChainSpec& spec) {
  spec.validate();
  return {spec.n_bath, spec.n_bath + spec.n_sys};
}

MpsState initial_state(const ChainSpec& spec, const MpsState& ground) {
  spec.validate();
  if (ground.size() != static_cast<std::size_t>(spec.n_sys)) {
    throw InvalidInput("ground state length does not match n_sys");
  }
  MpsState g = ground;
  if (!g.center()) g.move_center(0);
  const double scale = 1.0 / std::sqrt(g.center_norm_squared());
  const std::size_t gc = *g.center();
  const auto nb = static_cast<std::size_t>(spec.n_bath);
  const bool symmetric = g.conserves_charge();

  std::vector<SiteTensor> tensors;
  std::vector<BondSpace> bonds;
  auto lead_tensor = [](Spin spin) {
    SiteTensor t;
    const int s = static_cast<int>(spin);
    t.block[s] = Eigen::MatrixXcd::Ones(1, 1);
    t.block[1 - s] = Eigen::MatrixXcd::Zero(1, 1);
    return t;
  };
  auto single = [&](int charge) {
    const std::pair<int, Index> d{symmetric ? charge : 0, 1};
    return BondSpace::from_dims(std::span(&d, 1));
  };
  for (std::size_t i = 0; i < nb; ++i) {
    bonds.push_back(single(static_cast<int>(i)));
    tensors.push_back(lead_tensor(Spin::up));
  }
  const int offset = symmetric ? static_cast<int>(nb) : 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const BondSpace& space = g.bond_space(i);
    std::vector<std::pair<int, Index>> dims;
    for (const Sector& s : space.sectors()) dims.emplace_back(s.charge + offset, s.dim);
    bonds.push_back(BondSpace::from_dims(dims));
    SiteTensor t = g.site(i);
    if (i == gc) {
      for (auto& blk : t.block) blk *= scale;
    }
    tensors.push_back(std::move(t));
  }
  const BondSpace& last = g.bond_space(g.size());
  int charge = (symmetric ? last.sectors().front().charge : 0) + offset;
  for (std::size_t i = 0; i < nb; ++i) {
    bonds.push_back(single(charge));
    tensors.push_back(lead_tensor(Spin::down));
    charge -= 1;
  }
  bonds.push_back(single(charge));
  return MpsState(std::move(tensors), std::move(bonds), symmetric, gc + nb, 0.0);
}

namespace {

void record(Trajectory& traj, const MpsState& state, double t, double hopping) {
  Profiles p = measure_profiles(state, hopping);
  traj.times.push_back(t);
  traj.total_z.push_back(std::accumulate(p.z.begin(), p.z.end(), 0.0));
  traj.z_profiles.push_back(std::move(p.z));
  traj.currents.push_back(std::move(p.currents));
  traj.norms.push_back(std::sqrt(state.center_norm_squared()));
  traj.discarded_weights.push_back(state.cumulative_discarded_weight());
  traj.max_bonds.push_back(state.max_bond_dim());
}

}  // namespace

EvolutionResult evolve(MpsState state, const BondCouplings& couplings, const RunParams& params,
                       const EvolveHooks& hooks, const std::optional<EvolutionCheckpoint>& resume) {
  params.validate();
  if (state.size() != couplings.n_sites()) throw InvalidInput("state length does not match chain");
  const GateSchedule schedule = trotter_schedule(couplings, params.dt, TimeMode::real);
  const long n_steps = params.n_steps();

  Trajectory traj;
  traj.hopping = couplings.hopping;
  long step = 0;
  if (resume) {
    state = resume->state;
    traj = resume->trajectory;
    step = resume->step;
    if (state.size() != couplings.n_sites()) throw InvalidInput("checkpoint does not match chain");
  } else {
    if (!state.center()) state.move_center(0);
    record(traj, state, 0.0, couplings.hopping);
    if (hooks.on_record) hooks.on_record(traj);
  }

  using clock = std::chrono::steady_clock;
  auto last_checkpoint = clock::now();
  while (step < n_steps) {
    apply_trotter_step(state, schedule, params.trunc);
    ++step;
    if (step % params.record_stride == 0) {
      record(traj, state, static_cast<double>(step) * params.dt, couplings.hopping);
      if (hooks.on_record) hooks.on_record(traj);
    }
    if (hooks.on_checkpoint && hooks.checkpoint_interval_s > 0.0) {
      const auto now = clock::now();
      if (std::chrono::duration<double>(now - last_checkpoint).count() >= hooks.checkpoint_interval_s) {
        hooks.on_checkpoint(EvolutionCheckpoint{state, traj, step});
        last_checkpoint = now;
      }
    }
  }
  traj.quality_warning = state.cumulative_discarded_weight() > params.discard_alarm;
  const Eigen::MatrixXd res = continuity_residual(traj);
  traj.continuity_residual_max = res.size() > 0 ? res.cwiseAbs().maxCoeff() : 0.0;
  return {std::move(traj), std::move(state)};
}

EvolutionResult evolve(MpsState state, const ChainSpec& spec, const RunParams& params, const EvolveHooks& hooks,
                       const std::optional<EvolutionCheckpoint>& resume) {
  return evolve(std::move(state), chain_couplings(spec), params, hooks, resume);
}

}  // namespace xxz
