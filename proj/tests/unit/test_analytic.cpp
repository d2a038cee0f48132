#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "splitleap/analytic.hpp"
#include "splitleap/errors.hpp"
#include "splitleap/network_io.hpp"
#include "support/oracles.hpp"

using namespace splitleap;

namespace {

Matrix taylor_exp(const Matrix& A) {
  Matrix term = Matrix::Identity(A.rows(), A.cols());
  Matrix sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * A / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("isomerization stationary law") {
  const auto law = isomerization_stationary(1.0, 1.0, 100);
  CHECK(law.mean[0] == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(law.covariance(0, 0) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(law.mean[1] == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(law.covariance(0, 1) == doctest::Approx(-25.0).epsilon(1e-14));

  const auto skew = isomerization_stationary(3.0, 1.0, 1000);
  REQUIRE(!skew.marginal_pmf.empty());
  const auto& pmf = skew.marginal_pmf[0];
  CHECK(std::fabs(std::accumulate(pmf.begin(), pmf.end(), 0.0) - 1.0) < 1e-12);
  double m = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    m += static_cast<double>(k) * pmf[k];
    m2 += static_cast<double>(k) * static_cast<double>(k) * pmf[k];
  }
  CHECK(std::fabs(m - skew.mean[0]) < 1e-10 * skew.mean[0]);
  CHECK(std::fabs(m2 - m * m - skew.covariance(0, 0)) < 1e-10 * std::max(1.0, m2));
  CHECK(skew.mean[0] == doctest::Approx(250.0));
  CHECK(skew.covariance(0, 0) == doctest::Approx(187.5));

  const auto zero = isomerization_stationary(2.0, 5.0, 0);
  CHECK(zero.mean.norm() == 0.0);
  CHECK(zero.covariance.norm() == 0.0);
  REQUIRE(!zero.marginal_pmf.empty());
  CHECK(zero.marginal_pmf[0] == std::vector<double>{1.0});

  CHECK(isomerization_stationary(1.0, 1.0, kIsomerizationPmfLimit + 1).marginal_pmf.empty());
}

TEST_CASE("binomial pmf") {
  for (std::int64_t n : {0, 1, 7, 100, 5000}) {
    for (double p : {0.0, 0.2, 0.5, 1.0}) {
      const auto pmf = binomial_pmf(n, p);
      REQUIRE(pmf.size() == static_cast<std::size_t>(n + 1));
      CHECK(std::fabs(std::accumulate(pmf.begin(), pmf.end(), 0.0) - 1.0) < 1e-12);
    }
  }
  const auto b = binomial_pmf(4, 0.25);
  CHECK(b[0] == doctest::Approx(81.0 / 256.0).epsilon(1e-14));
  CHECK(b[2] == doctest::Approx(6.0 * 9.0 / 256.0).epsilon(1e-14));
}

TEST_CASE("matrix exponential") {
  CHECK((matrix_exponential(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm() == 0.0);
  Vector d(3);
  d << -2.0, 0.5, 3.0;
  const Matrix e = matrix_exponential(d.asDiagonal().toDenseMatrix(), 1.5);
  for (int i = 0; i < 3; ++i) CHECK(e(i, i) == doctest::Approx(std::exp(1.5 * d[i])).epsilon(1e-13));
  CHECK(std::fabs(e(0, 1)) < 1e-15);

  std::mt19937_64 gen(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    Matrix A(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = g(gen);
    const Matrix ref = taylor_exp(A);
    CHECK((matrix_exponential(A) - ref).norm() <= 1e-12 * ref.norm());
  }

  // Large argument: scaling and squaring path.
  Matrix rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  const Matrix r = matrix_exponential(rot, 40.0);
  CHECK(r(0, 0) == doctest::Approx(std::cos(40.0)).epsilon(1e-12));
  CHECK(r(1, 0) == doctest::Approx(std::sin(40.0)).epsilon(1e-12));

  const double c1 = 3.0;
  const double c2 = 1.0;
  const auto iso = isomerization_network(c1, c2);
  const Matrix gen2 = iso.stoichiometry() * iso.linearize_at(Vector::Ones(2)).C;
  const Matrix lim = matrix_exponential(gen2, 50.0);
  Matrix proj(2, 2);
  proj << c2, c2, c1, c1;
  proj /= c1 + c2;
  CHECK((lim - proj).norm() < 1e-12);
}

TEST_CASE("monomolecular solution") {
  const auto chain = monomolecular_chain({2.0, 1.0, 3.0, 0.5, 1.5, 2.5});
  const auto at0 = monomolecular_solution(chain, 100, 0.0);
  CHECK((at0.mean - Vector::Unit(4, 0) * 100.0).norm() < 1e-12);
  CHECK(at0.covariance.norm() < 1e-12);

  for (double t : {0.01, 0.3, 1.0, 5.0, 100.0}) {
    const Vector p = monomolecular_probabilities(chain, t);
    CHECK(std::fabs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= -1e-15);
    const auto law = monomolecular_solution(chain, 100, t);
    CHECK((law.mean - 100.0 * p).norm() < 1e-10);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double expect = i == j ? 100.0 * p[i] * (1.0 - p[i]) : -100.0 * p[i] * p[j];
        CHECK(law.covariance(i, j) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
      }
    Eigen::SelfAdjointEigenSolver<Matrix> es(law.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK((law.covariance * Vector::Ones(4)).norm() < 1e-10);
    REQUIRE(law.marginal_pmf.size() == 4);
    for (int i = 0; i < 4; ++i) {
      const auto b = binomial_pmf(100, p[i]);
      for (std::size_t k = 0; k < b.size(); ++k) CHECK(std::fabs(law.marginal_pmf[i][k] - b[k]) < 1e-12);
    }
  }

  // Stationary limit of the chain: detailed balance gives p ~ (1, 2, 12, 7.2).
  const Vector pinf = monomolecular_probabilities(chain, 200.0);
  Vector db(4);
  db << 1.0, 2.0, 2.0 * 3.0 / 0.5, 2.0 * 3.0 / 0.5 * 1.5 / 2.5;
  db /= db.sum();
  CHECK((pinf - db).norm() < 1e-12);

  CHECK_THROWS_AS(monomolecular_solution(stiff_nonlinear_network(), 10, 1.0), NotMonomolecular);
}

TEST_CASE("theta oracle") {
  for (double z : {0.1, 1.0, 1.99, 2.01, 10.0}) {
    const auto r = theta_oracle(0.0, z);
    CHECK(r.propagation == doctest::Approx(1.0 - z));
    CHECK(r.amplifier == doctest::Approx(2.0 / (2.0 - z)));
    CHECK(r.stable == (z < 2.0));
    const auto half = theta_oracle(0.5, z);
    CHECK(half.amplifier == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(half.propagation == doctest::Approx((2.0 - z) / (2.0 + z)));
    CHECK(half.stable);
  }
  const auto one = theta_oracle(1.0, 1.0);
  CHECK(one.propagation == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(one.amplifier == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("split-step oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const testsupport::Iso s{3.0, 1.0, 100.0};
  for (double z : {0.1, 1.0, 10.0, 100.0, 1e4}) {
    for (int k = 0; k < 20; ++k) {
      const double theta = u(gen);
      const auto row1 = split_step_oracle(theta, 1.0, 1.0, z);
      CHECK(row1.propagation == doctest::Approx(1.0 / (1.0 + z + theta * (1.0 - theta) * z * z)).epsilon(1e-13));
      CHECK(row1.stable);
      const double q = 1.0 + (1.0 - theta) * z;
      CHECK(row1.amplifier ==
            doctest::Approx(2.0 * z / ((1.0 + theta * z) * (1.0 + theta * z) - 1.0 / (q * q))).epsilon(1e-12));

      const auto row2 = split_step_oracle(theta, 0.0, 1.0, z);
      const auto th = theta_oracle(theta, z);
      CHECK(row2.propagation == doctest::Approx(th.propagation).epsilon(1e-13));
      if (th.stable) CHECK(row2.amplifier == doctest::Approx(th.amplifier).epsilon(1e-12));
      CHECK(row2.stable == th.stable);

      const double eta1 = u(gen);
      const double eta2 = u(gen);
      const auto row3 = split_step_oracle(0.0, eta1, eta2, z);
      CHECK(row3.propagation == doctest::Approx((1.0 - (1.0 - eta1) * z) / (1.0 + eta1 * z)).epsilon(1e-13));
      // theta = 0 row, from 2z / (1 - P^2) with P as above.
      if (row3.stable)
        CHECK(row3.amplifier ==
              doctest::Approx(2.0 * (1.0 + eta1 * z) * (1.0 + eta1 * z) / (2.0 + (2.0 * eta1 - 1.0) * z))
                  .epsilon(1e-10));

      // Independent check against the fixed point of the scalar recursion.
      const double e1 = u(gen);
      const double e2 = u(gen);
      const auto gen3 = split_step_oracle(theta, e1, e2, z);
      CHECK(gen3.propagation ==
            doctest::Approx(testsupport::split_propagation(theta, e1, e2, z)).epsilon(1e-13));
      if (gen3.stable) {
        const auto st = testsupport::split_stationary(s, z / s.lambda(), theta, e1, e2);
        CHECK(gen3.amplifier == doctest::Approx(st.var / s.stationary_var()).epsilon(1e-10));
        CHECK(st.mean == doctest::Approx(s.stationary_mean()).epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(split_step_oracle(2.0, 1.0, 1.0, 1.0), DivisionByZero);
  CHECK_THROWS_AS(split_step_oracle(0.0, 0.0, 1.0, 2.0), DivisionByZero);
}
