#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "splitleap/analytic.hpp"
#include "splitleap/linalg.hpp"
#include "splitleap/moments.hpp"
#include "splitleap/network.hpp"
#include "splitleap/scheme_spec.hpp"
#include "splitleap/tau_leap.hpp"

namespace splitleap {

/// One step of a tau schedule: step length and the parameters used on it.
struct PlannedStep {
  double tau = 0.0;
  SchemeParameters params;
};

/// Constant-tau schedule covering [0, t_final]; the last step is clipped.
std::vector<PlannedStep> uniform_plan(double tau, double t_final, const SchemeParameters& params);

struct EnsembleConfig {
  SchemeSpec scheme;
  std::vector<PlannedStep> plan;  // tau schemes; ignored for ssa
  double t_final = 0.0;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  std::vector<double> grid;             // output times in [0, t_final], increasing
  std::vector<double> histogram_times;  // subset of grid
  bool keep_samples = false;
  unsigned workers = 1;
  StepOptions step_options;
  double max_failure_fraction = 0.01;
};

using Histogram = std::map<std::int64_t, std::uint64_t>;

struct EnsembleStats {
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Vector> mean_se;
  std::vector<Matrix> covariance;
  std::vector<double> histogram_times;
  std::vector<std::vector<Histogram>> histograms;  // [histogram time][species]
  std::vector<Matrix> samples;                     // [grid time] n x N, only with keep_samples
  std::size_t n_samples = 0;
  std::size_t failures = 0;
  std::uint64_t ssa_events = 0;
};

/// Runs n_samples independent paths (path i draws from RngStream(seed, i)) and
/// aggregates them in fixed path order, so the result does not depend on the
/// worker count. Paths whose implicit stage fails are dropped and counted;
/// more than max_failure_fraction failures raise EnsembleFailure.
EnsembleStats run_ensemble(const ReactionNetwork& network, const State& x0, const EnsembleConfig& config);

struct ErrorReport {
  double mean_error = 0.0;
  double cov_error = 0.0;
  bool zero_reference = false;  // a reference norm was zero; that error is absolute
};

/// Relative errors at the final grid time.
ErrorReport compare(const EnsembleStats& stats, const MomentPair& reference);
ErrorReport compare(const EnsembleStats& stats, const StationaryLaw& reference);

/// Normalized histogram of one species at one histogram time.
std::map<std::int64_t, double> marginal_histogram(const EnsembleStats& stats, std::size_t species, double time);

/// Total-variation distance between an estimate and an exact pmf indexed from 0.
double total_variation(const std::map<std::int64_t, double>& estimate, const std::vector<double>& exact);

}  // namespace splitleap
