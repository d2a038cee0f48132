#include "splitleap/tau_leap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

SchemeParameters SchemeParameters::constant(std::size_t channels, double theta, double eta1, double eta2,
                                            double lower, double upper) {
  const auto n = static_cast<Eigen::Index>(channels);
  return {Vector::Constant(n, theta), Vector::Constant(n, eta1), Vector::Constant(n, eta2), lower, upper};
}

bool SchemeParameters::valid() const {
  if (!(lower < upper)) return false;
  if (eta1.size() != theta.size() || eta2.size() != theta.size()) return false;
  auto inside = [&](const Vector& v) {
    return v.allFinite() && (v.size() == 0 || (v.minCoeff() >= lower && v.maxCoeff() <= upper));
  };
  return inside(theta) && inside(eta1) && inside(eta2);
}

Vector SchemeParameters::packed() const {
  Vector p(3 * theta.size());
  p << theta, eta1, eta2;
  return p;
}

SchemeParameters SchemeParameters::unpack(const Vector& packed, double lower, double upper) {
  const Eigen::Index r = packed.size() / 3;
  return {packed.segment(0, r), packed.segment(r, r), packed.segment(2 * r, r), lower, upper};
}

State StepOutcome::next_state() const {
  State s;
  s.counts.resize(static_cast<std::size_t>(next.size()));
  for (Eigen::Index i = 0; i < next.size(); ++i) s.counts[static_cast<std::size_t>(i)] = std::llround(next[i]);
  return s;
}

ImplicitSolveResult implicit_solve(const ReactionNetwork& network, const Vector& base, const Vector& weights,
                                   double tau, const NewtonOptions& options, const Vector* initial_guess) {
  const Matrix& nu = network.stoichiometry();
  const auto n = static_cast<Eigen::Index>(network.n_species());
  ImplicitSolveResult result;
  if ((weights.array() == 0.0).all()) {
    result.z = base;
    return result;
  }
  const Matrix nu_w = tau * nu * weights.asDiagonal();

  if (network.is_first_order()) {
    // a(z) = C z + d exactly.
    const LinearizedPropensity lin = network.linearize_at(Vector::Zero(n));
    const Matrix lhs = Matrix::Identity(n, n) - nu_w * lin.C;
    Eigen::PartialPivLU<Matrix> lu(lhs);
    result.z = lu.solve(base + nu_w * lin.d);
    result.iterations = 1;
    Vector a;
    network.stage_propensities(result.z, a);
    const Vector residual = result.z - base - nu_w * a;
    result.residual = residual.lpNorm<Eigen::Infinity>() / std::max(1.0, result.z.lpNorm<Eigen::Infinity>());
    if (!result.z.allFinite()) throw NewtonDivergence("implicit_solve: singular linear stage");
    return result;
  }

  Vector z = initial_guess ? *initial_guess : base;
  Vector a;
  Matrix jac;
  auto residual_of = [&](const Vector& v, Vector& out) {
    network.stage_propensities(v, a);
    out = v - base - nu_w * a;
    return out.lpNorm<Eigen::Infinity>();
  };
  Vector f;
  double norm = residual_of(z, f);
  for (int it = 0; it <= options.max_iterations; ++it) {
    const double scale = std::max(1.0, z.lpNorm<Eigen::Infinity>());
    if (norm <= options.tolerance * scale) {
      result.z = z;
      result.iterations = it;
      result.residual = norm / scale;
      return result;
    }
    if (it == options.max_iterations) break;
    network.stage_jacobian(z, jac);
    const Matrix J = Matrix::Identity(n, n) - nu_w * jac;
    const Vector delta = J.partialPivLu().solve(-f);
    if (!delta.allFinite()) break;
    double step = 1.0;
    Vector trial = z + delta;
    Vector f_trial;
    double trial_norm = residual_of(trial, f_trial);
    for (int halvings = 0; halvings < 40 && !(trial_norm < norm); ++halvings) {
      step *= options.damping;
      trial = z + step * delta;
      trial_norm = residual_of(trial, f_trial);
    }
    if (!std::isfinite(trial_norm)) break;
    z = std::move(trial);
    f = std::move(f_trial);
    norm = trial_norm;
  }
  std::ostringstream msg;
  msg << "implicit_solve: Newton did not converge in " << options.max_iterations
      << " iterations (residual " << norm << ")";
  throw NewtonDivergence(msg.str());
}

std::vector<std::int64_t> integrality_projection(const Vector& per_channel_increments) {
  std::vector<std::int64_t> k(static_cast<std::size_t>(per_channel_increments.size()));
  for (Eigen::Index r = 0; r < per_channel_increments.size(); ++r)
    k[static_cast<std::size_t>(r)] = static_cast<std::int64_t>(std::nearbyint(per_channel_increments[r]));
  return k;
}

namespace {

std::pair<std::int64_t, std::int64_t> min_and_deficit(const std::vector<std::int64_t>& v) {
  std::int64_t mn = std::numeric_limits<std::int64_t>::max();
  std::int64_t deficit = 0;
  for (std::int64_t c : v) {
    mn = std::min(mn, c);
    if (c < 0) deficit -= c;
  }
  return {mn, deficit};
}

// Best improving pair of single decrements; applied in place.
bool pair_step(const ReactionNetwork& network, std::vector<std::int64_t>& y, std::vector<std::int64_t>& k,
               std::int64_t current_min, std::int64_t current_deficit) {
  const std::size_t n = network.n_species();
  const std::size_t m = network.n_reactions();
  std::vector<std::int64_t> trial(n);
  std::size_t best_r = m;
  std::size_t best_s = m;
  std::int64_t best_min = current_min;
  std::int64_t best_deficit = current_deficit;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t q = r; q < m; ++q) {
      if (k[r] == 0 || k[q] == 0 || (r == q && std::llabs(k[r]) < 2)) continue;
      const std::int64_t sr = k[r] > 0 ? 1 : -1;
      const std::int64_t sq = k[q] > 0 ? 1 : -1;
      for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] - sr * network.nu(i, r) - sq * network.nu(i, q);
      const auto [mn, deficit] = min_and_deficit(trial);
      if (mn > best_min || (mn == best_min && deficit < best_deficit)) {
        best_r = r;
        best_s = q;
        best_min = mn;
        best_deficit = deficit;
      }
    }
  }
  if (best_r == m) return false;
  for (std::size_t r : {best_r, best_s}) {
    const std::int64_t sign = k[r] > 0 ? 1 : -1;
    k[r] -= sign;
    for (std::size_t i = 0; i < n; ++i) y[i] -= sign * network.nu(i, r);
  }
  return true;
}

// Largest common fraction of k, truncated toward zero, that stays nonnegative.
void scale_to_feasible(const ReactionNetwork& network, const State& y_prev, std::vector<std::int64_t>& k) {
  const std::size_t n = network.n_species();
  const std::size_t m = network.n_reactions();
  auto scaled = [&](double s) {
    std::vector<std::int64_t> out(m);
    for (std::size_t r = 0; r < m; ++r) out[r] = static_cast<std::int64_t>(std::trunc(s * static_cast<double>(k[r])));
    return out;
  };
  auto feasible = [&](const std::vector<std::int64_t>& kk) {
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t v = y_prev.counts[i];
      for (std::size_t r = 0; r < m; ++r) v += network.nu(i, r) * kk[r];
      if (v < 0) return false;
    }
    return true;
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(scaled(mid)) ? lo : hi) = mid;
  }
  k = scaled(lo);
}

}  // namespace

std::vector<std::int64_t> nonnegativity_bounding(const ReactionNetwork& network, const State& y_prev,
                                                 std::vector<std::int64_t> k) {
  const std::size_t n = network.n_species();
  const std::size_t m = network.n_reactions();
  if (!y_prev.valid()) throw Infeasible("nonnegativity_bounding: previous state is negative");

  std::vector<std::int64_t> y = y_prev.counts;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < n; ++i) y[i] += network.nu(i, r) * k[r];

  auto [current_min, current_deficit] = min_and_deficit(y);
  std::vector<std::int64_t> trial(n);
  while (current_min < 0) {
    std::size_t best = m;
    std::int64_t best_min = std::numeric_limits<std::int64_t>::min();
    std::int64_t best_deficit = std::numeric_limits<std::int64_t>::max();
    for (std::size_t r = 0; r < m; ++r) {
      if (k[r] == 0) continue;
      const std::int64_t sign = k[r] > 0 ? 1 : -1;
      for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] - sign * network.nu(i, r);
      const auto [mn, deficit] = min_and_deficit(trial);
      if (mn > best_min || (mn == best_min && deficit < best_deficit)) {
        best = r;
        best_min = mn;
        best_deficit = deficit;
      }
    }
    if (best == m) throw Infeasible("nonnegativity_bounding: no feasible reduction");
    auto apply = [&](std::size_t r, std::int64_t reps) {
      const std::int64_t sign = k[r] > 0 ? 1 : -1;
      k[r] -= sign * reps;
      for (std::size_t i = 0; i < n; ++i) y[i] -= sign * reps * network.nu(i, r);
    };
    if (best_min > current_min || best_deficit < current_deficit) {
      // Repeat the chosen decrement while it keeps lifting negative counts and
      // creates no new ones.
      const std::int64_t sign = k[best] > 0 ? 1 : -1;
      std::int64_t reps = std::llabs(k[best]);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t delta = -sign * network.nu(i, best);
        if (delta > 0 && y[i] < 0) reps = std::min(reps, (-y[i] + delta - 1) / delta);
        if (delta < 0) reps = std::min(reps, y[i] >= 0 ? y[i] / -delta : std::int64_t{0});
      }
      apply(best, std::max<std::int64_t>(reps, 1));
    } else if (!pair_step(network, y, k, current_min, current_deficit)) {
      scale_to_feasible(network, y_prev, k);
      return k;
    }
    std::tie(current_min, current_deficit) = min_and_deficit(y);
  }
  return k;
}

namespace {

double draw(RngStream& stream, double mean, const StepOptions& options) {
  if (!std::isfinite(mean)) throw NegativePropensity("tau-leap: non-finite propensity at a stage value");
  return options.mean_noise ? mean : static_cast<double>(stream.poisson(mean));
}

// Rounds, bounds and assembles the outcome from real per-channel totals.
void finish(const ReactionNetwork& network, const Vector& y, const StepOptions& options, StepOutcome& out) {
  const Matrix& nu = network.stoichiometry();
  if (!options.integrality) {
    out.next = out.unprojected;
    out.channel_increments.clear();
    return;
  }
  out.channel_increments = integrality_projection(out.channel_totals);
  if (options.bounding) {
    State prev;
    prev.counts.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) prev.counts[static_cast<std::size_t>(i)] = std::llround(y[i]);
    auto bounded = nonnegativity_bounding(network, prev, out.channel_increments);
    out.bounded = bounded != out.channel_increments;
    out.channel_increments = std::move(bounded);
  }
  Vector k(static_cast<Eigen::Index>(out.channel_increments.size()));
  for (std::size_t r = 0; r < out.channel_increments.size(); ++r)
    k[static_cast<Eigen::Index>(r)] = static_cast<double>(out.channel_increments[r]);
  out.next = y + nu * k;
}

}  // namespace

StepOutcome theta_step(const ReactionNetwork& network, const Vector& y, double tau, double theta,
                       RngStream& stream, const StepOptions& options) {
  if (!(tau > 0.0)) throw InvalidArgument("theta_step: tau must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta_step: theta must lie in [0, 1]");
  const Matrix& nu = network.stoichiometry();
  const auto m = static_cast<Eigen::Index>(network.n_reactions());

  Vector a_y;
  network.stage_propensities(y, a_y);
  Vector poisson(m);
  for (Eigen::Index r = 0; r < m; ++r) poisson[r] = draw(stream, std::max(0.0, a_y[r] * tau), options);

  const Vector base = y + nu * (poisson - theta * tau * a_y);
  StepOutcome out;
  out.stage_hat = y;
  out.stage_tilde = base;
  if (theta == 0.0) {
    out.unprojected = base;
    out.channel_totals = poisson;
  } else {
    out.unprojected = implicit_solve(network, base, Vector::Constant(m, theta), tau, {}, &y).z;
    Vector a_next;
    network.stage_propensities(out.unprojected, a_next);
    out.channel_totals = theta * tau * a_next + poisson - theta * tau * a_y;
  }
  finish(network, y, options, out);
  return out;
}

StepOutcome slow_scale_split_step(const ReactionNetwork& network, const Vector& y, double tau,
                                  const SchemeParameters& params, RngStream& stream, const StepOptions& options) {
  if (!(tau > 0.0)) throw InvalidArgument("slow_scale_split_step: tau must be positive");
  const auto m = static_cast<Eigen::Index>(network.n_reactions());
  if (static_cast<Eigen::Index>(params.channels()) != m || !params.valid())
    throw InvalidArgument("slow_scale_split_step: parameters invalid or of the wrong size");
  const Matrix& nu = network.stoichiometry();
  const auto& theta = params.theta.array();
  const auto& eta1 = params.eta1.array();
  const auto& eta2 = params.eta2.array();

  // Stage 1: implicit theta sub-step of length (1 - theta) tau.
  Vector a_y;
  network.stage_propensities(y, a_y);
  const Vector drift1_explicit = ((1.0 - theta) * (1.0 - eta1) * a_y.array()).matrix();
  const Vector base1 = y + tau * nu * drift1_explicit;
  const Vector w1 = ((1.0 - theta) * eta1).matrix();
  StepOutcome out;
  out.stage_hat = implicit_solve(network, base1, w1, tau, {}, &y).z;
  Vector a_hat;
  network.stage_propensities(out.stage_hat, a_hat);

  // Stage 2: centred Poisson increments at Y^.
  Vector noise(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double mean = std::max(0.0, a_hat[r] * tau);
    noise[r] = draw(stream, mean, options) - mean;
  }
  out.stage_tilde = out.stage_hat + nu * noise;

  // Stage 3: implicit theta sub-step of length theta tau.
  Vector a_tilde;
  network.stage_propensities(out.stage_tilde, a_tilde);
  const Vector base3 = out.stage_tilde + tau * nu * (theta * (1.0 - eta2) * a_tilde.array()).matrix();
  const Vector w3 = (theta * eta2).matrix();
  out.unprojected = implicit_solve(network, base3, w3, tau, {}, &out.stage_hat).z;
  Vector a_next;
  network.stage_propensities(out.unprojected, a_next);

  out.channel_totals = (tau * (1.0 - theta) * ((1.0 - eta1) * a_y.array() + eta1 * a_hat.array()) +
                        noise.array() +
                        tau * theta * ((1.0 - eta2) * a_tilde.array() + eta2 * a_next.array()))
                           .matrix();
  finish(network, y, options, out);
  return out;
}

StepOutcome standard_split_step(const ReactionNetwork& network, const Vector& y, double tau, double theta,
                                RngStream& stream, const StepOptions& options) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("standard_split_step: theta must lie in [0, 1]");
  // Stage 3 vanishes when the slow-scale theta is zero; eta1 carries the implicitness.
  const auto params = SchemeParameters::constant(network.n_reactions(), 0.0, theta, 1.0);
  return slow_scale_split_step(network, y, tau, params, stream, options);
}

}  // namespace splitleap
