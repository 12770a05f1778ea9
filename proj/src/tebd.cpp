#include "xxz/tebd.hpp"

#include "xxz/error.hpp"

namespace xxz {

double apply_layer(MpsState& state, const GateLayer& layer, const TruncParams& trunc) {
  if (layer.bonds.empty()) return 0.0;
  if (static_cast<std::size_t>(layer.bonds.back()) >= state.size()) {
    throw InvalidInput("gate layer does not fit the state");
  }
  if (!state.center()) state.move_center(0);
  const auto first = static_cast<std::size_t>(layer.bonds.front() - 1);
  const auto last = static_cast<std::size_t>(layer.bonds.back() - 1);
  const bool rightward = 2 * *state.center() <= first + last + 1;
  double discarded = 0.0;
  const std::size_t n = layer.bonds.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t g = rightward ? k : n - 1 - k;
    const auto site = static_cast<std::size_t>(layer.bonds[g] - 1);
    const std::size_t c = *state.center();
    if (c < site) state.move_center(site);
    if (c > site + 1) state.move_center(site + 1);
    discarded += state.apply_two_site(layer.gates[g], site, trunc,
                                      rightward ? Sweep::left_to_right : Sweep::right_to_left);
  }
  return discarded;
}

double apply_trotter_step(MpsState& state, const GateSchedule& schedule, const TruncParams& trunc) {
  double discarded = 0.0;
  for (const GateLayer& layer : schedule.layers) discarded += apply_layer(state, layer, trunc);
  return discarded;
}

}  // namespace xxz
