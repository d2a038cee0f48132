#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splitleap/analytic.hpp"
#include "splitleap/csv.hpp"
#include "splitleap/ensemble.hpp"
#include "splitleap/estimation.hpp"
#include "splitleap/network.hpp"
#include "splitleap/scheme_spec.hpp"

namespace splitleap {

/// Output times k * t_final / points, k = 0..points.
std::vector<double> uniform_grid(double t_final, std::size_t points);

/// Step schedule for a tau scheme. Slow-scale runs parameter estimation and
/// stores the trajectory; the other schemes use a constant step.
std::vector<PlannedStep> build_plan(const ReactionNetwork& network, const SchemeSpec& scheme, const Vector& x0,
                                    double tau, double t_final, const EstimationConfig& estimation,
                                    std::optional<ParameterTrajectory>* trajectory = nullptr);

CsvTable moments_table(const std::string& comment, const std::vector<std::string>& species,
                       const std::vector<double>& times, const std::vector<Vector>& means,
                       const std::vector<Matrix>& covariances, const std::vector<Vector>* standard_errors = nullptr);
CsvTable histogram_table(const std::string& comment, const Histogram& histogram);
CsvTable parameters_table(const std::string& comment, const ParameterTrajectory& trajectory);
CsvTable stability_table(const std::string& comment, const std::vector<double>& thetas,
                         const std::vector<double>& eta1s, const std::vector<double>& eta2s,
                         const std::vector<double>& zs);

/// moments.csv plus hist_<species>_<time>.csv for every species at t_final.
CsvBundle ensemble_files(const std::string& comment, const ReactionNetwork& network, const EnsembleStats& stats,
                         const std::string& prefix = "");

struct SimulateConfig {
  std::string network_label;
  State x0;
  SchemeSpec scheme;
  double tau = 0.0;  // unused by ssa
  double t_final = 1.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t grid_points = 10;
  EstimationConfig estimation;
};

struct SimulateResult {
  CsvBundle files;
  EnsembleStats stats;
  std::optional<ParameterTrajectory> trajectory;
};

SimulateResult simulate(const ReactionNetwork& network, const SimulateConfig& config);

/// reference_moments.csv (linearized moment recursion) and, for tau schemes,
/// scheme_moments.csv (exact moments of the scheme on the linearization).
CsvBundle moments_pipeline(const ReactionNetwork& network, const SimulateConfig& config);

/// parameters.csv from the estimation loop.
CsvBundle estimate_pipeline(const ReactionNetwork& network, const SimulateConfig& config);

inline const std::array<double, 5> kExample1Alphas = {1.0, 10.0, 100.0, 1000.0, 10000.0};

/// Estimation defaults for the linear chain: alpha1 = alpha2 = 0.99, box [0, 2].
inline EstimationConfig example1_estimation() {
  EstimationConfig c;
  c.alpha1 = 0.99;
  c.alpha2 = 0.99;
  c.upper = 2.0;
  return c;
}

struct Example1Config {
  std::array<double, 6> rates = {1e4, 1e4, 1e2, 1e2, 1e5, 1e5};
  std::int64_t x_T = 1000;
  double tau = 1.0;
  double t_final = 10.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t grid_points = 10;
  EstimationConfig estimation = example1_estimation();
  bool sweep = false;  // error-vs-alpha study at tau = 1, T = 100
  std::size_t sweep_samples = 10000;
  std::vector<double> sweep_alphas{kExample1Alphas.begin(), kExample1Alphas.end()};
};

struct SweepRow {
  double alpha = 0.0;
  std::string scheme;
  ErrorReport error;
};

struct Example1Result {
  CsvBundle files;
  StationaryLaw exact;  // at t_final
  std::map<std::string, EnsembleStats> stats;
  ParameterTrajectory trajectory;
  std::vector<SweepRow> sweep;
};

/// Error of implicit theta and slow-scale at T = 100, tau = 1 for c = alpha * 1.
std::vector<SweepRow> example1_sweep(const Example1Config& config);

Example1Result example1(const Example1Config& config);

struct Example2Config {
  std::array<double, 6> rates = {1e3, 1e3, 1e-5, 10.0, 1.0, 1e6};
  std::array<std::int64_t, 3> x0 = {1000, 1000, 1000000};
  double tau = 1e-3;
  double t_final = 0.01;
  std::size_t samples = 10000;
  std::size_t ssa_samples = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::size_t grid_points = 10;
  EstimationConfig estimation;
};

struct Example2Result {
  CsvBundle files;
  std::map<std::string, EnsembleStats> stats;
  ParameterTrajectory trajectory;
};

Example2Result example2(const Example2Config& config);

}  // namespace splitleap
