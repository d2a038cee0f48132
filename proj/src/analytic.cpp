#include "splitleap/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

std::vector<double> binomial_pmf(std::int64_t n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n + 1), 0.0);
  if (p <= 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double total = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double v = std::exp(lgn - std::lgamma(kk + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) +
                              kk * lp + static_cast<double>(n - k) * lq);
    pmf[static_cast<std::size_t>(k)] = v;
    total += v;
  }
  // lgamma rounding leaves the sum a few ulps per term off one
  for (double& v : pmf) v /= total;
  return pmf;
}

StationaryLaw isomerization_stationary(double c1, double c2, std::int64_t x_T) {
  if (!(c1 > 0.0 && c2 > 0.0)) throw InvalidArgument("isomerization_stationary: rates must be positive");
  if (x_T < 0) throw InvalidArgument("isomerization_stationary: x_T must be nonnegative");
  const double lambda = c1 + c2;
  const double q = c2 / lambda;
  const double xt = static_cast<double>(x_T);
  StationaryLaw law;
  law.mean = Vector(2);
  law.mean << q * xt, (1.0 - q) * xt;
  const double var = c1 * c2 / (lambda * lambda) * xt;
  law.covariance = Matrix(2, 2);
  law.covariance << var, -var, -var, var;
  if (x_T <= kIsomerizationPmfLimit) {
    auto pmf = binomial_pmf(x_T, q);
    std::vector<double> mirrored(pmf.rbegin(), pmf.rend());
    law.marginal_pmf = {std::move(pmf), std::move(mirrored)};
  }
  return law;
}

namespace {

void require_conversions(const ReactionNetwork& network) {
  for (std::size_t r = 0; r < network.n_reactions(); ++r) {
    const Reaction& rx = network.reaction(r);
    int in = 0, out = 0;
    std::size_t from = 0, to = 0;
    for (std::size_t i = 0; i < network.n_species(); ++i) {
      in += rx.reactants[i];
      out += rx.products[i];
      if (rx.reactants[i] == 1) from = i;
      if (rx.products[i] == 1) to = i;
    }
    if (in != 1 || out != 1 || from == to) {
      std::ostringstream msg;
      msg << "reaction " << r << " is not a conversion S_i -> S_j";
      throw NotMonomolecular(msg.str());
    }
  }
}

}  // namespace

Vector monomolecular_probabilities(const ReactionNetwork& network, double t) {
  require_conversions(network);
  const auto n = static_cast<Eigen::Index>(network.n_species());
  const Matrix A = network.stoichiometry() * network.linearize_at(Vector::Zero(n)).C;
  return matrix_exponential(A, t).col(0);
}

StationaryLaw monomolecular_solution(const ReactionNetwork& network, std::int64_t x_T, double t) {
  const Vector p = monomolecular_probabilities(network, t);
  const double xt = static_cast<double>(x_T);
  StationaryLaw law;
  law.mean = xt * p;
  law.covariance = -xt * p * p.transpose();
  law.covariance.diagonal() = xt * (p.array() * (1.0 - p.array())).matrix();
  if (x_T + 1 <= kMaxPmfSupport) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
      law.marginal_pmf.push_back(binomial_pmf(x_T, std::clamp(p[i], 0.0, 1.0)));
  }
  return law;
}

Matrix matrix_exponential(const Matrix& A_in, double t) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const Eigen::Index n = A_in.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix A = t * A_in;
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return I;
  int s = 0;
  if (norm1 > theta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  if (s > 0) A /= std::ldexp(1.0, s);

  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Matrix R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) R = R * R;
  return R;
}

StabilityReport theta_oracle(double theta, double z) {
  StabilityReport rep;
  rep.propagation = (1.0 - (1.0 - theta) * z) / (1.0 + theta * z);
  rep.amplifier = 2.0 / (2.0 + (2.0 * theta - 1.0) * z);
  rep.stable = std::fabs(rep.propagation) < 1.0;
  return rep;
}

StabilityReport split_step_oracle(double theta, double eta1, double eta2, double z) {
  const double den1 = 1.0 + eta1 * (1.0 - theta) * z;
  const double den3 = 1.0 + eta2 * theta * z;
  if (den1 == 0.0 || den3 == 0.0) throw DivisionByZero("split_step_oracle: vanishing stage denominator");
  const double r1 = (1.0 - (1.0 - eta1) * (1.0 - theta) * z) / den1;
  const double r3 = (1.0 - (1.0 - eta2) * theta * z) / den3;
  StabilityReport rep;
  rep.propagation = r1 * r3;
  rep.stable = std::fabs(rep.propagation) < 1.0;
  // 2z / (1/r3^2 - r1^2), written without dividing by r3.
  const double den = 1.0 - rep.propagation * rep.propagation;
  if (den == 0.0) throw DivisionByZero("split_step_oracle: |P| = 1, no stationary variance");
  rep.amplifier = 2.0 * z * r3 * r3 / den;
  return rep;
}

}  // namespace splitleap
