#pragma once

#include "xxz/model.hpp"
#include "xxz/mps.hpp"

namespace xxz {

// Applies every layer of one Trotter step, sweeping each layer in the
// direction that starts next to the current orthogonality center.
// Returns the summed discarded weight of the step.
double apply_trotter_step(MpsState& state, const GateSchedule& schedule, const TruncParams& trunc);

double apply_layer(MpsState& state, const GateLayer& layer, const TruncParams& trunc);

}  // namespace xxz
