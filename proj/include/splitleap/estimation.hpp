#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "splitleap/linalg.hpp"
#include "splitleap/moments.hpp"
#include "splitleap/network.hpp"
#include "splitleap/tau_leap.hpp"

namespace splitleap {

inline constexpr double kThetaPrime = 0.63397459621556135;     // (3 - sqrt 3) / 2
inline constexpr double kThetaSecond = -0.056624327025935903;  // (-9 + 5 sqrt 3) / 6
inline constexpr double kThetaBranchPoint = 2.45;

/// Piecewise fit of the theta that makes the stationary variance amplifier of
/// the (theta, 1, 1) scheme equal to one.
double theta_from_relaxation(double lambda_tau);

/// Root in [0, 1] of 2z / ((1 + theta z)^2 - (1 + (1 - theta) z)^-2) = 1,
/// bracketed around theta_from_relaxation(z) +- 0.3. Throws NoBracket.
double solve_theta_equation(double lambda_tau);

/// |E - mu|^2 + |Cov - sigma|_F^2.
double objective(const MomentPair& predicted, const MomentPair& reference);

struct MinimizeOptions {
  double tolerance = 1e-10;    // on the value spread of the simplex
  double x_tolerance = 1e-7;   // on its diameter, as a fraction of (upper - lower)
  int max_evaluations = 2000;
  int restarts = 1;
  double initial_step = 0.1;  // fraction of (upper - lower)
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;  // false: evaluation budget exhausted, x is best so far
};

/// Nelder-Mead on the box [lower, upper]^n; every trial point is projected
/// onto the box before evaluation.
MinimizeResult minimize_box(const std::function<double(const Vector&)>& f, const Vector& initial, double lower,
                            double upper, const MinimizeOptions& options = {});

/// Projected Levenberg-Marquardt for |r(x)|^2 on [lower, upper]^n with a
/// forward-difference Jacobian. Coordinates pinned at a bound by the gradient
/// are frozen for the step.
MinimizeResult minimize_least_squares_box(const std::function<Vector(const Vector&)>& residual, const Vector& initial,
                                          double lower, double upper, const MinimizeOptions& options = {});

enum class Optimizer { LevenbergMarquardt, NelderMead };

enum class ObjectiveMoments {
  Incremental,          // one scheme step from the stored scheme moments of step n-1
  CandidateThroughout,  // candidate iterated from the initial condition over all steps
};

struct EstimationConfig {
  double lower = 0.0;
  double upper = 1.0;
  double alpha1 = 0.05;
  double alpha2 = 0.05;
  double tau_reduction_factor = 0.5;
  double tau_floor_fraction = 1e-12;  // of t_final
  double tilde_theta = 1.0;           // reference discretization
  bool solve_theta_exactly = false;   // initialize with the root-finder instead of the fit
  ObjectiveMoments moments = ObjectiveMoments::Incremental;
  // Reject candidates whose first-stage mean minus stage_margin standard
  // deviations has a negative count, or whose mean propensities go negative.
  bool admissible_stages = true;
  double stage_margin = 3.0;
  Optimizer method = Optimizer::NelderMead;
  MinimizeOptions optimizer;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct StepRecord {
  double t = 0.0;  // t_n, end of the step
  double tau = 0.0;
  SchemeParameters params;
  double objective = 0.0;
  double mean_error = 0.0;  // |E - mu| / |mu|, or absolute when |mu| = 0
  double cov_error = 0.0;
  bool optimizer_converged = true;
  int tau_reductions = 0;  // retries spent on this step
  MomentPair reference;
  MomentPair scheme;
};

struct ParameterTrajectory {
  SchemeParameters initial;
  std::vector<StepRecord> steps;
  int tau_reductions = 0;
};

/// Initial parameters: reversible pairs share theta from the pair's
/// relaxation rate at x0, eta1 = eta2 = 1; unpaired channels use their own decay
/// rate when positive, theta' otherwise.
SchemeParameters initial_parameters(const ReactionNetwork& network, const Vector& x0, double tau,
                                    const EstimationConfig& config);

/// Mutable state of the estimation loop between steps.
struct EstimationState {
  double t = 0.0;
  double tau = 0.0;
  MomentPair reference;
  MomentPair scheme;
  LinearizedPropensity lin;  // linearization at the current reference mean
  SchemeParameters params;
  SchemeParameters cold_params;
  MomentPair initial;
  std::vector<std::pair<double, LinearizedPropensity>> history;  // accepted (tau_k, linearization)
};

EstimationState start_estimation(const ReactionNetwork& network, const Vector& x0, double tau,
                                 const EstimationConfig& config);

/// One accepted step of the estimation loop starting from state.t with step
/// min(state.tau, t_final - state.t). Reduces state.tau and retries until the
/// fit meets both thresholds; throws TauUnderflow below the floor.
StepRecord estimate_step(const ReactionNetwork& network, EstimationState& state, double t_final,
                         const EstimationConfig& config);

/// Full estimation loop over [0, t_final].
ParameterTrajectory run_estimation(const ReactionNetwork& network, const Vector& x0, double tau, double t_final,
                                   const EstimationConfig& config = {});

}  // namespace splitleap
