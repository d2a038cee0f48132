#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "splitleap/linalg.hpp"
#include "splitleap/network.hpp"
#include "splitleap/rng.hpp"

namespace splitleap {

/// Per-channel parameters (theta_r, eta1_r, eta2_r) of the slow-scale
/// split-step scheme, all confined to [lower, upper].
struct SchemeParameters {
  Vector theta;
  Vector eta1;
  Vector eta2;
  double lower = 0.0;
  double upper = 1.0;

  static SchemeParameters constant(std::size_t channels, double theta, double eta1, double eta2,
                                   double lower = 0.0, double upper = 1.0);
  std::size_t channels() const { return static_cast<std::size_t>(theta.size()); }
  bool valid() const;
  /// [theta; eta1; eta2] stacked into one vector of length 3R.
  Vector packed() const;
  static SchemeParameters unpack(const Vector& packed, double lower, double upper);
};

struct StepOptions {
  bool integrality = true;  // round per-channel totals to the nearest integer
  bool bounding = true;     // enforce nonnegative counts (needs integrality)
  bool mean_noise = false;  // debug: Poisson draws replaced by their means
};

struct StepOutcome {
  Vector next;  // Y_{n+1}; integer-valued unless integrality is off
  Vector stage_hat;
  Vector stage_tilde;
  Vector unprojected;  // Y_{n+1} before rounding and bounding
  Vector channel_totals;
  std::vector<std::int64_t> channel_increments;  // after rounding and bounding
  bool bounded = false;                          // bounding changed the increments

  State next_state() const;
};

struct NewtonOptions {
  double tolerance = 1e-10;  // relative to max(1, |z|_inf)
  int max_iterations = 50;
  double damping = 0.5;
};

struct ImplicitSolveResult {
  Vector z;
  int iterations = 0;
  double residual = 0.0;  // relative, infinity norm
};

/// Solves z = base + tau * sum_r nu_r w_r a_r(z). First-order networks take one
/// linear solve; otherwise damped Newton with the analytic Jacobian. Throws
/// NewtonDivergence when the iteration fails.
ImplicitSolveResult implicit_solve(const ReactionNetwork& network, const Vector& base,
                                   const Vector& weights, double tau, const NewtonOptions& options = {},
                                   const Vector* initial_guess = nullptr);

/// Drift-implicit theta tau-leap (explicit at theta = 0, implicit at 1).
StepOutcome theta_step(const ReactionNetwork& network, const Vector& y, double tau, double theta,
                       RngStream& stream, const StepOptions& options = {});

/// Deterministic theta stage to Y^, then Y_{n+1} = Y^ + nu * (P(a(Y^) tau) - a(Y^) tau).
StepOutcome standard_split_step(const ReactionNetwork& network, const Vector& y, double tau,
                                double theta, RngStream& stream, const StepOptions& options = {});

/// Two implicit deterministic stages around one centred Poisson stage.
StepOutcome slow_scale_split_step(const ReactionNetwork& network, const Vector& y, double tau,
                                  const SchemeParameters& params, RngStream& stream,
                                  const StepOptions& options = {});

/// Nearest integer, ties to even.
std::vector<std::int64_t> integrality_projection(const Vector& per_channel_increments);

/// Shrinks |k_r| (keeping signs) until y_prev + nu k >= 0. Greedy: each pass
/// decrements the channel whose reduction raises the minimum species count the
/// most (ties: larger drop in total deficit, then lowest index). When no single
/// decrement helps, the best pair is tried, and failing that every k_r is
/// scaled by the largest common feasible fraction.
std::vector<std::int64_t> nonnegativity_bounding(const ReactionNetwork& network, const State& y_prev,
                                                 std::vector<std::int64_t> k);

}  // namespace splitleap
