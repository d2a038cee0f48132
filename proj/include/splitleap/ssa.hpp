#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "splitleap/network.hpp"
#include "splitleap/rng.hpp"

namespace splitleap {

struct SsaEvent {
  double holding_time = 0.0;
  std::size_t channel = 0;
};

/// One Gillespie direct-method draw; std::nullopt when the state is absorbing
/// (total propensity zero).
std::optional<SsaEvent> ssa_step(const ReactionNetwork& network, const State& x, RngStream& stream);

struct PathRecord {
  std::vector<double> times;
  std::vector<State> states;
  bool absorbed = false;
  std::size_t events = 0;
};

enum class RecordPolicy { Grid, EveryEvent };

/// Exact CTMC path on [0, t_final]. With RecordPolicy::Grid the state at each
/// grid time is recorded (the last state holds between events); with
/// EveryEvent the initial state and every post-event state are recorded.
PathRecord ssa_path(const ReactionNetwork& network, const State& x0, double t_final,
                    const std::vector<double>& output_grid, RngStream& stream,
                    RecordPolicy policy = RecordPolicy::Grid);

/// Grid-only variant writing into caller storage; used by the ensemble runner.
/// Returns the number of events fired.
std::size_t ssa_grid_path(const ReactionNetwork& network, const State& x0, double t_final,
                          const std::vector<double>& grid, RngStream& stream,
                          std::vector<State>& out);

}  // namespace splitleap
