#pragma once

#include <cstdint>
#include <vector>

#include "splitleap/linalg.hpp"
#include "splitleap/network.hpp"

namespace splitleap {

/// Exact law of the state at one time (or at stationarity).
struct StationaryLaw {
  Vector mean;
  Matrix covariance;
  /// Per-species marginal pmf indexed by count; empty when the support is too
  /// large to tabulate.
  std::vector<std::vector<double>> marginal_pmf;
};

/// Propagation coefficient P and stationary variance amplifier A of a scheme
/// applied to the scalar isomerization test problem, z = lambda * tau.
struct StabilityReport {
  double propagation = 0.0;
  double amplifier = 0.0;
  bool stable = false;  // |P| < 1
};

inline constexpr std::int64_t kIsomerizationPmfLimit = 10'000;
inline constexpr std::int64_t kMaxPmfSupport = 100'000;

/// Binomial(x_T, c2 / (c1 + c2)) law of X1 at stationarity; X2 = x_T - X1.
StationaryLaw isomerization_stationary(double c1, double c2, std::int64_t x_T);

/// Multinomial law at time t of a network of conversions S_i -> S_j started
/// from x_T molecules of the first species. Throws NotMonomolecular otherwise.
StationaryLaw monomolecular_solution(const ReactionNetwork& network, std::int64_t x_T, double t);

/// exp(t nu C) e_1 for a conversion network.
Vector monomolecular_probabilities(const ReactionNetwork& network, double t);

/// exp(t A) by scaling and squaring with the degree-13 Pade approximant.
Matrix matrix_exponential(const Matrix& A, double t = 1.0);

std::vector<double> binomial_pmf(std::int64_t n, double p);

/// Theta tau-leap: P = (1 - (1-theta) z) / (1 + theta z), A = 2 / (2 + (2 theta - 1) z).
StabilityReport theta_oracle(double theta, double z);

/// Two-stage split-step with scalar (theta, eta1, eta2). Throws DivisionByZero
/// when a stage denominator vanishes or |P| = 1 exactly.
StabilityReport split_step_oracle(double theta, double eta1, double eta2, double z);

}  // namespace splitleap
