#include <doctest.h>

#include <cmath>
#include <random>

#include "splitleap/errors.hpp"
#include "splitleap/network.hpp"
#include "splitleap/network_io.hpp"

using namespace splitleap;

namespace {

ReactionNetwork single(std::vector<int> in, std::vector<int> out, double c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < in.size(); ++i) names.push_back("S" + std::to_string(i + 1));
  return ReactionNetwork(names, {Reaction{std::move(in), std::move(out), c}});
}

double binom(std::int64_t n, int k) {
  if (n < k) return 0.0;
  double v = 1.0;
  for (int j = 0; j < k; ++j) v = v * static_cast<double>(n - j) / static_cast<double>(j + 1);
  return v;
}

}  // namespace

TEST_CASE("propensity examples") {
  CHECK(single({1, 0}, {0, 1}, 2.0).propensity(0, State{5, 0}) == 10.0);
  CHECK(single({2}, {0}, 1.0).propensity(0, State{4}) == 6.0);
  CHECK(single({2}, {0}, 1.0).propensity(0, State{1}) == 0.0);
  CHECK(single({1, 1, 0}, {0, 0, 1}, 1e3).propensity(0, State{1000, 1000, 0}) == 1e9);
}

TEST_CASE("propensity matches the binomial product on random states") {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> coeff(0, 3);
  std::uniform_int_distribution<std::int64_t> count(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> in{coeff(gen), coeff(gen), coeff(gen)};
    const auto net = single(in, {1, 0, 0}, 0.7);
    State x{count(gen), count(gen), count(gen)};
    double expect = 0.7;
    for (std::size_t i = 0; i < 3; ++i) expect *= binom(x[i], in[i]);
    CHECK(net.propensity(0, x) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(net.propensity(0, x) >= 0.0);
  }
}

TEST_CASE("propensity_vector examples") {
  const auto iso = isomerization_network(1.0, 1.0);
  const Vector a = iso.propensity_vector(State{3, 7});
  CHECK(a[0] == 3.0);
  CHECK(a[1] == 7.0);
  CHECK(iso.propensity_vector(State{0, 0}).isZero());

  const auto ex2 = stiff_nonlinear_network();
  const Vector b = ex2.propensity_vector(State{1000, 1000, 1000000});
  const double expect[] = {1e9, 1e9, 1e4, 1e4, 1e9, 1e9};
  for (int r = 0; r < 6; ++r) CHECK(b[r] == doctest::Approx(expect[r]).epsilon(1e-14));
}

TEST_CASE("jacobian examples") {
  CHECK(single({1, 0}, {0, 1}, 2.0).jacobian(Vector::Zero(2))(0, 0) == 2.0);
  CHECK(single({1, 0}, {0, 1}, 2.0).jacobian(Vector::Zero(2))(0, 1) == 0.0);
  Vector x(1);
  x << 4.0;
  CHECK(single({2}, {0}, 1.0).jacobian(x)(0, 0) == doctest::Approx(3.5));
  Vector y(3);
  y << 3.0, 5.0, 2.0;
  const Matrix J = single({1, 1, 0}, {0, 0, 1}, 4.0).jacobian(y);
  CHECK(J(0, 0) == 20.0);
  CHECK(J(0, 1) == 12.0);
  CHECK(J(0, 2) == 0.0);
}

TEST_CASE("jacobian agrees with central differences of the polynomial extension") {
  const auto net = stiff_nonlinear_network();
  std::vector<std::string> names{"A", "B"};
  const ReactionNetwork cubic(names, {Reaction{{2, 1}, {0, 0}, 0.3}, Reaction{{0, 3}, {1, 0}, 2.0}});
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(1.0, 1e6);
  for (const ReactionNetwork* n : {&net, &cubic}) {
    for (int trial = 0; trial < 50; ++trial) {
      Vector x(static_cast<Eigen::Index>(n->n_species()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(gen);
      const Matrix J = n->jacobian(x);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-4 * x[i];
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const Vector fd = (n->propensity_vector(xp) - n->propensity_vector(xm)) / (2.0 * h);
        for (Eigen::Index r = 0; r < fd.size(); ++r) {
          const double scale = std::max(std::fabs(J(r, i)), 1e-300);
          if (J(r, i) == 0.0) {
            CHECK(fd[r] == 0.0);
          } else {
            CHECK(std::fabs(fd[r] - J(r, i)) / scale <= 1e-8);
          }
        }
      }
    }
  }
}

TEST_CASE("linearization") {
  const auto iso = isomerization_network(2.0, 3.0);
  Vector m(2);
  m << 1.5, 7.25;
  const auto lin = iso.linearize_at(m);
  CHECK(lin.C(0, 0) == 2.0);
  CHECK(lin.C(0, 1) == 0.0);
  CHECK(lin.C(1, 0) == 0.0);
  CHECK(lin.C(1, 1) == 3.0);
  CHECK(lin.d.isZero());

  std::vector<std::string> names{"A", "B"};
  const ReactionNetwork first(names, {Reaction{{0, 0}, {1, 0}, 4.0}, Reaction{{1, 0}, {0, 1}, 1.5},
                                      Reaction{{0, 1}, {0, 0}, 0.5}});
  Vector m2(2);
  m2 << 100.0, 3.0;
  const auto l1 = first.linearize_at(m);
  const auto l2 = first.linearize_at(m2);
  CHECK(l1.C == l2.C);
  CHECK(l1.d == l2.d);
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int64_t> count(0, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    State x{count(gen), count(gen)};
    const Vector diff = first.propensity_vector(x) - (l1.C * x.as_vector() + l1.d);
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
  }

  const auto ex2 = stiff_nonlinear_network();
  Vector mu(3);
  mu << 1e3, 1e3, 1e6;
  const auto l3 = ex2.linearize_at(mu);
  CHECK(l3.C(0, 0) == 1e6);
  CHECK(l3.C(0, 1) == 1e6);
  CHECK(l3.C(0, 2) == 0.0);
}

TEST_CASE("reversible pairs") {
  const auto iso = isomerization_network(1.0, 2.0);
  auto det = detect_reversible_pairs(iso);
  REQUIRE(det.pairs.size() == 1);
  CHECK(det.pairs[0] == ReversiblePair{0, 1});
  CHECK(det.unpaired.empty());

  const auto chain = monomolecular_chain({1, 1, 1, 1, 1, 1});
  det = detect_reversible_pairs(chain);
  REQUIRE(det.pairs.size() == 3);
  CHECK(det.pairs[0] == ReversiblePair{0, 1});
  CHECK(det.pairs[1] == ReversiblePair{2, 3});
  CHECK(det.pairs[2] == ReversiblePair{4, 5});

  std::vector<std::string> names{"A", "B"};
  const ReactionNetwork decays(names, {Reaction{{1, 0}, {0, 0}, 1.0}, Reaction{{0, 1}, {0, 0}, 1.0}});
  det = detect_reversible_pairs(decays);
  CHECK(det.pairs.empty());
  CHECK(det.unpaired == std::vector<std::size_t>{0, 1});

  for (const ReactionNetwork* n : {&iso, &chain}) {
    const auto a = detect_reversible_pairs(*n);
    const auto b = detect_reversible_pairs(n->reversed());
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
      const bool same = a.pairs[k] == b.pairs[k];
      const bool swapped = a.pairs[k].forward == b.pairs[k].backward && a.pairs[k].backward == b.pairs[k].forward;
      CHECK((same || swapped));
    }
  }
}

TEST_CASE("relaxation rates") {
  const auto iso = isomerization_network(2.0, 3.0);
  CHECK(relaxation_rate(iso, {0, 1}, Vector::Zero(2)) == doctest::Approx(5.0));

  const auto chain = monomolecular_chain({1e4, 1e4, 1e4, 1e4, 1e4, 1e4});
  CHECK(relaxation_rate(chain, {0, 1}, Vector::Zero(4)) == doctest::Approx(2e4));

  const auto ex2 = stiff_nonlinear_network();
  Vector x(3);
  x << 1e3, 1e3, 1e6;
  CHECK(relaxation_rate(ex2, {4, 5}, x) == doctest::Approx(1.0 * (1e3 + 1e6) + 1e6));
}

TEST_CASE("network JSON") {
  const std::string text = R"({"species": ["A", "B"], "reactions": [
      {"reactants": {"A": 1}, "products": {"B": 1}, "rate": 2.5},
      {"reactants": {"B": 2}, "products": {}, "rate": 0.5}]})";
  const auto net = parse_network_json(text);
  CHECK(net.n_species() == 2);
  CHECK(net.n_reactions() == 2);
  CHECK(net.nu(0, 0) == -1);
  CHECK(net.nu(1, 1) == -2);
  const auto again = parse_network_json(network_to_json(net));
  CHECK(again.stoichiometry() == net.stoichiometry());

  auto message = [](const std::string& s) {
    try {
      parse_network_json(s);
    } catch (const ParseError& e) {
      return std::string(e.what());
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string bad_rate = R"({"species": ["A"], "reactions": [
      {"reactants": {"A": 1}, "products": {}, "rate": 1},
      {"reactants": {"A": 1}, "products": {}, "rate": -1}]})";
  CHECK(message(bad_rate).find("reaction 1") != std::string::npos);
  const std::string bad_species = R"({"species": ["A"], "reactions": [
      {"reactants": {"Z": 1}, "products": {}, "rate": 1}]})";
  CHECK(message(bad_species).find("reaction 0") != std::string::npos);
  CHECK_THROWS_AS(load_network("/nonexistent/net.json"), Error);

  std::vector<std::string> names{"A"};
  const ReactionNetwork third(names, {Reaction{{3}, {0}, 1.0}});
  CHECK(third.warnings().size() == 1);
  CHECK_THROWS_AS(ReactionNetwork(names, {Reaction{{1}, {0}, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(ReactionNetwork(names, {}), InvalidArgument);
}

TEST_CASE("example networks match their printed stoichiometry") {
  const auto chain = monomolecular_chain({1, 2, 3, 4, 5, 6});
  Matrix expect(4, 6);
  expect << -1, 1, 0, 0, 0, 0,  //
      1, -1, -1, 1, 0, 0,       //
      0, 0, 1, -1, -1, 1,       //
      0, 0, 0, 0, 1, -1;
  CHECK(chain.stoichiometry() == expect);

  const auto ex2 = stiff_nonlinear_network();
  Matrix e2(3, 6);
  e2 << -1, 1, -1, 1, 1, -1,  //
      -1, 1, 1, -1, -1, 1,    //
      1, -1, -1, 1, -1, 1;
  CHECK(ex2.stoichiometry() == e2);
  // a1 = c1 x1 x2, a2 = c2 x3, a3 = c3 x1 x3, a4 = c4 x2, a5 = c5 x2 x3, a6 = c6 x1
  const State x{3, 5, 7};
  const Vector a = ex2.propensity_vector(x);
  CHECK(a[0] == doctest::Approx(1e3 * 15));
  CHECK(a[1] == doctest::Approx(1e3 * 7));
  CHECK(a[2] == doctest::Approx(1e-5 * 21));
  CHECK(a[3] == doctest::Approx(10.0 * 5));
  CHECK(a[4] == doctest::Approx(1.0 * 35));
  CHECK(a[5] == doctest::Approx(1e6 * 3));
}
