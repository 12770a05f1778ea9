#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "xxz/model.hpp"
#include "xxz/mps.hpp"
#include "xxz/trajectory.hpp"

namespace xxz {

struct RunParams {
  double dt = 0.05;
  double t_max = 1.0;
  TruncParams trunc{};
  int record_stride = 4;
  // Cumulative discarded weight above which the trajectory is flagged.
  double discard_alarm = 1e-2;

  void validate() const;
  long n_steps() const;
};

// 1-based junction bonds (n_bath, n_bath + n_sys).
std::pair<int, int> junction_indices(const ChainSpec& spec);

// |up...up> ⊗ |ground> ⊗ |down...down>, normalized.
MpsState initial_state(const ChainSpec& spec, const MpsState& ground);

struct EvolutionCheckpoint {
  MpsState state;
  Trajectory trajectory;
  long step = 0;
};

struct EvolveHooks {
  std::function<void(const Trajectory&)> on_record;
  std::function<void(const EvolutionCheckpoint&)> on_checkpoint;
  double checkpoint_interval_s = 0.0;  // 0 disables checkpoints
};

struct EvolutionResult {
  Trajectory trajectory;
  MpsState final_state;
};

// Real-time TEBD for ceil(t_max / dt) steps, recording observables at step 0
// and every record_stride steps. A checkpoint continues a previous run.
EvolutionResult evolve(MpsState state, const ChainSpec& spec, const RunParams& params,
                       const EvolveHooks& hooks = {},
                       const std::optional<EvolutionCheckpoint>& resume = std::nullopt);

// Same engine on arbitrary couplings (used by verification code).
EvolutionResult evolve(MpsState state, const BondCouplings& couplings, const RunParams& params,
                       const EvolveHooks& hooks = {},
                       const std::optional<EvolutionCheckpoint>& resume = std::nullopt);

}  // namespace xxz
