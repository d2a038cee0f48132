#include "splitleap/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

// x (x-1) ... (x-k+1)
double falling(double x, int k) {
  double p = 1.0;
  for (int j = 0; j < k; ++j) p *= (x - j);
  return p;
}

double falling_derivative(double x, int k) {
  double s = 0.0;
  for (int skip = 0; skip < k; ++skip) {
    double p = 1.0;
    for (int j = 0; j < k; ++j)
      if (j != skip) p *= (x - j);
    s += p;
  }
  return s;
}

}  // namespace

int Reaction::order() const { return std::accumulate(reactants.begin(), reactants.end(), 0); }

bool State::valid() const {
  return std::all_of(counts.begin(), counts.end(), [](std::int64_t c) { return c >= 0; });
}

Vector State::as_vector() const {
  Vector v(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]);
  return v;
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  const std::size_t n = species_.size();
  const std::size_t m = reactions_.size();
  if (n == 0) throw InvalidArgument("network needs at least one species");
  if (m == 0) throw InvalidArgument("network needs at least one reaction");

  nu_int_.assign(n * m, 0);
  nu_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  reactant_terms_.resize(m);
  inv_factorials_.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    Reaction& rx = reactions_[r];
    if (rx.reactants.empty()) rx.reactants.assign(n, 0);
    if (rx.products.empty()) rx.products.assign(n, 0);
    if (rx.reactants.size() != n || rx.products.size() != n) {
      std::ostringstream msg;
      msg << "reaction " << r << ": stoichiometry length does not match species count";
      throw InvalidArgument(msg.str());
    }
    if (!(rx.rate > 0.0) || !std::isfinite(rx.rate)) {
      std::ostringstream msg;
      msg << "reaction " << r << ": rate constant must be positive and finite";
      throw InvalidArgument(msg.str());
    }
    double fact = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rx.reactants[i] < 0 || rx.products[i] < 0) {
        std::ostringstream msg;
        msg << "reaction " << r << ": negative stoichiometric coefficient";
        throw InvalidArgument(msg.str());
      }
      if (rx.reactants[i] > 0) {
        reactant_terms_[r].push_back({i, rx.reactants[i]});
        fact *= factorial(rx.reactants[i]);
      }
      const int change = rx.products[i] - rx.reactants[i];
      nu_int_[r * n + i] = change;
      nu_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = change;
    }
    inv_factorials_[r] = 1.0 / fact;
    max_order_ = std::max(max_order_, rx.order());
    if (rx.order() > 2) {
      std::ostringstream msg;
      msg << "reaction " << r << " has order " << rx.order() << " (> 2)";
      warnings_.push_back(msg.str());
    }
  }
}

double ReactionNetwork::propensity(std::size_t r, const State& x) const {
  double a = reactions_[r].rate * inv_factorials_[r];
  for (const Term& t : reactant_terms_[r]) {
    const std::int64_t xi = x[t.species];
    if (xi < t.coeff) return 0.0;
    a *= falling(static_cast<double>(xi), t.coeff);
  }
  return a;
}

Vector ReactionNetwork::propensity_vector(const State& x) const {
  Vector a(static_cast<Eigen::Index>(n_reactions()));
  for (std::size_t r = 0; r < n_reactions(); ++r) a[static_cast<Eigen::Index>(r)] = propensity(r, x);
  return a;
}

double ReactionNetwork::channel_poly(std::size_t r, const Vector& x) const {
  double a = reactions_[r].rate * inv_factorials_[r];
  for (const Term& t : reactant_terms_[r]) a *= falling(x[static_cast<Eigen::Index>(t.species)], t.coeff);
  return a;
}

Vector ReactionNetwork::propensity_vector(const Vector& x) const {
  Vector a(static_cast<Eigen::Index>(n_reactions()));
  for (std::size_t r = 0; r < n_reactions(); ++r) a[static_cast<Eigen::Index>(r)] = channel_poly(r, x);
  return a;
}

Matrix ReactionNetwork::jacobian(const Vector& x) const {
  Matrix J = Matrix::Zero(static_cast<Eigen::Index>(n_reactions()), static_cast<Eigen::Index>(n_species()));
  for (std::size_t r = 0; r < n_reactions(); ++r) {
    const auto& terms = reactant_terms_[r];
    const double scale = reactions_[r].rate * inv_factorials_[r];
    for (std::size_t k = 0; k < terms.size(); ++k) {
      double g = scale * falling_derivative(x[static_cast<Eigen::Index>(terms[k].species)], terms[k].coeff);
      for (std::size_t l = 0; l < terms.size(); ++l)
        if (l != k) g *= falling(x[static_cast<Eigen::Index>(terms[l].species)], terms[l].coeff);
      J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(terms[k].species)) = g;
    }
  }
  return J;
}

LinearizedPropensity ReactionNetwork::linearize_at(const Vector& mu) const {
  LinearizedPropensity lin;
  lin.C = jacobian(mu);
  lin.d = propensity_vector(mu) - lin.C * mu;
  if (is_first_order()) {
    // Exact: d collects the zero-order channels only.
    for (std::size_t r = 0; r < n_reactions(); ++r)
      lin.d[static_cast<Eigen::Index>(r)] = reactant_terms_[r].empty() ? reactions_[r].rate : 0.0;
  }
  return lin;
}

void ReactionNetwork::stage_propensities(const Vector& x, Vector& out) const {
  out.resize(static_cast<Eigen::Index>(n_reactions()));
  for (std::size_t r = 0; r < n_reactions(); ++r) {
    const auto& terms = reactant_terms_[r];
    double a = reactions_[r].rate * inv_factorials_[r];
    if (reactions_[r].order() <= 1) {
      for (const Term& t : terms) a *= x[static_cast<Eigen::Index>(t.species)];
    } else {
      for (const Term& t : terms) a *= falling(std::max(0.0, x[static_cast<Eigen::Index>(t.species)]), t.coeff);
      a = std::max(0.0, a);
    }
    out[static_cast<Eigen::Index>(r)] = a;
  }
}

void ReactionNetwork::stage_jacobian(const Vector& x, Matrix& out) const {
  out.setZero(static_cast<Eigen::Index>(n_reactions()), static_cast<Eigen::Index>(n_species()));
  for (std::size_t r = 0; r < n_reactions(); ++r) {
    const auto& terms = reactant_terms_[r];
    const double scale = reactions_[r].rate * inv_factorials_[r];
    const auto ri = static_cast<Eigen::Index>(r);
    if (reactions_[r].order() <= 1) {
      for (const Term& t : terms) out(ri, static_cast<Eigen::Index>(t.species)) = scale;
      continue;
    }
    double value = scale;
    for (const Term& t : terms) value *= falling(std::max(0.0, x[static_cast<Eigen::Index>(t.species)]), t.coeff);
    if (value <= 0.0) continue;  // clamped region, flat
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double xk = x[static_cast<Eigen::Index>(terms[k].species)];
      if (xk < 0.0) continue;
      double g = scale * falling_derivative(xk, terms[k].coeff);
      for (std::size_t l = 0; l < terms.size(); ++l)
        if (l != k) g *= falling(std::max(0.0, x[static_cast<Eigen::Index>(terms[l].species)]), terms[l].coeff);
      out(ri, static_cast<Eigen::Index>(terms[k].species)) = g;
    }
  }
}

ReactionNetwork ReactionNetwork::reversed() const {
  std::vector<Reaction> rx = reactions_;
  for (Reaction& r : rx) std::swap(r.reactants, r.products);
  return ReactionNetwork(species_, std::move(rx));
}

PairDetection detect_reversible_pairs(const ReactionNetwork& network) {
  const std::size_t m = network.n_reactions();
  std::vector<bool> used(m, false);
  PairDetection out;
  for (std::size_t r = 0; r < m; ++r) {
    if (used[r]) continue;
    const Reaction& a = network.reaction(r);
    for (std::size_t s = r + 1; s < m; ++s) {
      if (used[s]) continue;
      const Reaction& b = network.reaction(s);
      if (a.reactants == b.products && a.products == b.reactants && a.reactants != a.products) {
        used[r] = used[s] = true;
        out.pairs.push_back({r, s});
        break;
      }
    }
    if (!used[r]) out.unpaired.push_back(r);
  }
  return out;
}

double channel_relaxation_rate(const ReactionNetwork& network, std::size_t r, const Vector& x) {
  const Matrix J = network.jacobian(x);
  return -network.stoichiometry().col(static_cast<Eigen::Index>(r)).dot(J.row(static_cast<Eigen::Index>(r)));
}

double relaxation_rate(const ReactionNetwork& network, const ReversiblePair& pair, const Vector& x_star) {
  const Matrix J = network.jacobian(x_star);
  const Matrix& nu = network.stoichiometry();
  double trace = 0.0;
  for (std::size_t r : {pair.forward, pair.backward})
    trace += nu.col(static_cast<Eigen::Index>(r)).dot(J.row(static_cast<Eigen::Index>(r)));
  const double lambda = -trace;
  if (!(lambda > 0.0)) {
    std::ostringstream msg;
    msg << "reversible pair (" << pair.forward << ", " << pair.backward
        << ") is not locally stable: relaxation rate " << lambda;
    throw UnstablePair(msg.str());
  }
  return lambda;
}

}  // namespace splitleap
