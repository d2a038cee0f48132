#include "splitleap/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

double theta_from_relaxation(double lambda_tau) {
  if (!(lambda_tau > 0.0) || !std::isfinite(lambda_tau))
    throw InvalidArgument("theta_from_relaxation: lambda*tau must be positive and finite");
  if (lambda_tau <= kThetaBranchPoint) return kThetaPrime + kThetaSecond * lambda_tau;
  return std::sqrt(2.0 / lambda_tau) - 1.0 / lambda_tau;
}

namespace {

// The theta-equation multiplied out and divided by z^2.
double theta_residual(double theta, double z) {
  const double q = theta * (1.0 - theta);
  const double s = 1.0 - theta;
  return (1.0 + 2.0 * q - 4.0 * s) + z * (2.0 * q - 2.0 * s * s) + q * q * z * z;
}

}  // namespace

double solve_theta_equation(double lambda_tau) {
  if (!(lambda_tau > 0.0) || !std::isfinite(lambda_tau))
    throw InvalidArgument("solve_theta_equation: lambda*tau must be positive and finite");
  const double guess = theta_from_relaxation(lambda_tau);
  double lo = std::max(0.0, guess - 0.3);
  double hi = std::min(1.0, guess + 0.3);
  double flo = theta_residual(lo, lambda_tau);
  const double fhi = theta_residual(hi, lambda_tau);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    std::ostringstream msg;
    msg << "solve_theta_equation: no sign change in [" << lo << ", " << hi << "] at z = " << lambda_tau;
    throw NoBracket(msg.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fmid = theta_residual(mid, lambda_tau);
    if (fmid == 0.0) return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double objective(const MomentPair& predicted, const MomentPair& reference) {
  if (predicted.mu.size() != reference.mu.size() || predicted.sigma.rows() != reference.sigma.rows() ||
      predicted.sigma.cols() != reference.sigma.cols())
    throw InvalidArgument("objective: dimension mismatch");
  return (predicted.mu - reference.mu).squaredNorm() + (predicted.sigma - reference.sigma).squaredNorm();
}

MinimizeResult minimize_box(const std::function<double(const Vector&)>& f, const Vector& initial, double lower,
                            double upper, const MinimizeOptions& options) {
  if (!(lower < upper)) throw InvalidArgument("minimize_box: lower must be below upper");
  const Eigen::Index n = initial.size();
  MinimizeResult result;
  auto project = [&](Vector x) { return Vector(x.cwiseMax(lower).cwiseMin(upper)); };
  auto eval = [&](const Vector& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  result.x = project(initial);
  result.value = eval(result.x);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  // Adaptive coefficients for moderate dimension.
  const double dn = static_cast<double>(n);
  const double c_reflect = 1.0;
  const double c_expand = 1.0 + 2.0 / dn;
  const double c_contract = 0.75 - 0.5 / dn;
  const double c_shrink = 1.0 - 1.0 / dn;
  const double step = options.initial_step * (upper - lower);

  bool budget_left = true;
  for (int round = 0; round <= options.restarts && budget_left; ++round) {
    std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), result.x);
    std::vector<double> values(static_cast<std::size_t>(n + 1), result.value);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector& v = simplex[static_cast<std::size_t>(i + 1)];
      v[i] = (v[i] + step <= upper) ? v[i] + step : v[i] - step;
      v = project(v);
      values[static_cast<std::size_t>(i + 1)] = eval(v);
    }
    const double start_value = result.value;
    std::vector<std::size_t> order(simplex.size());
    bool converged = false;
    while (true) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[order.size() - 2];

      const double spread = values[worst] - values[best];
      double diameter = 0.0;
      for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).lpNorm<Eigen::Infinity>());
      if ((std::isfinite(spread) && spread <= options.tolerance * (1.0 + std::fabs(values[best])) &&
           diameter <= options.x_tolerance * (upper - lower)) ||
          diameter <= options.tolerance * (upper - lower)) {
        converged = true;
        break;
      }
      if (result.evaluations >= options.max_evaluations) {
        budget_left = false;
        break;
      }

      Vector centroid = Vector::Zero(n);
      for (std::size_t k = 0; k < simplex.size(); ++k)
        if (k != worst) centroid += simplex[k];
      centroid /= dn;

      const Vector xr = project(centroid + c_reflect * (centroid - simplex[worst]));
      const double fr = eval(xr);
      if (fr < values[best]) {
        const Vector xe = project(centroid + c_expand * (xr - centroid));
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[worst] = xe;
          values[worst] = fe;
        } else {
          simplex[worst] = xr;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = xr;
        values[worst] = fr;
        continue;
      }
      const bool outside = fr < values[worst];
      const Vector xc = outside ? project(centroid + c_contract * (xr - centroid))
                                : project(centroid - c_contract * (centroid - simplex[worst]));
      const double fc = eval(xc);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = xc;
        values[worst] = fc;
        continue;
      }
      for (std::size_t k = 0; k < simplex.size(); ++k) {
        if (k == best) continue;
        simplex[k] = project(simplex[best] + c_shrink * (simplex[k] - simplex[best]));
        values[k] = eval(simplex[k]);
      }
    }
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (values[k] < result.value) {
        result.value = values[k];
        result.x = simplex[k];
      }
    }
    result.converged = converged;
    if (!budget_left) break;
    if (round > 0 && start_value - result.value <= options.tolerance * (1.0 + std::fabs(result.value))) break;
  }
  return result;
}

MinimizeResult minimize_least_squares_box(const std::function<Vector(const Vector&)>& residual, const Vector& initial,
                                          double lower, double upper, const MinimizeOptions& options) {
  if (!(lower < upper)) throw InvalidArgument("minimize_least_squares_box: lower must be below upper");
  const Eigen::Index n = initial.size();
  MinimizeResult result;
  auto eval = [&](const Vector& x, Vector& r) {
    ++result.evaluations;
    r = residual(x);
    const double v = r.squaredNorm();
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  Vector x = initial.cwiseMax(lower).cwiseMin(upper);
  Vector r;
  double f = eval(x, r);
  result.x = x;
  result.value = f;
  if (!std::isfinite(f)) return result;
  if (n == 0 || f == 0.0) {
    result.converged = true;
    return result;
  }

  const double h_base = 1e-7 * (upper - lower);
  double lambda = 1e-3;
  Matrix J;
  Vector r_trial;
  while (result.evaluations + n + 1 <= options.max_evaluations) {
    J.resize(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector xp = x;
      const double h = (x[j] + h_base <= upper) ? h_base : -h_base;
      xp[j] += h;
      Vector rp;
      if (!std::isfinite(eval(xp, rp))) {
        xp[j] = std::clamp(x[j] - h, lower, upper);
        if (xp[j] == x[j] || !std::isfinite(eval(xp, rp))) {
          J.col(j).setZero();
          continue;
        }
        J.col(j) = (rp - r) / (xp[j] - x[j]);
        continue;
      }
      J.col(j) = (rp - r) / h;
    }
    if (!J.allFinite()) break;
    const Vector g = J.transpose() * r;

    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool pinned = (x[j] <= lower && g[j] > 0.0) || (x[j] >= upper && g[j] < 0.0);
      if (!pinned) free.push_back(j);
    }
    double g_free = 0.0;
    for (Eigen::Index j : free) g_free = std::max(g_free, std::fabs(g[j]));
    if (free.empty() || g_free <= options.tolerance * (1.0 + f)) {
      result.converged = true;
      break;
    }

    const auto m = static_cast<Eigen::Index>(free.size());
    Matrix Jf(J.rows(), m);
    Vector gf(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Jf.col(k) = J.col(free[static_cast<std::size_t>(k)]);
      gf[k] = g[free[static_cast<std::size_t>(k)]];
    }
    const Matrix H = Jf.transpose() * Jf;

    bool accepted = false;
    bool small_step = false;
    while (result.evaluations < options.max_evaluations) {
      Matrix Hl = H;
      for (Eigen::Index k = 0; k < m; ++k) Hl(k, k) += lambda * std::max(H(k, k), 1e-12);
      const Vector d = Hl.ldlt().solve(-gf);
      Vector trial = x;
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index j = free[static_cast<std::size_t>(k)];
        trial[j] = std::clamp(trial[j] + d[k], lower, upper);
      }
      if ((trial - x).lpNorm<Eigen::Infinity>() <= options.tolerance * (upper - lower)) {
        small_step = true;
        break;
      }
      const double ft = eval(trial, r_trial);
      if (ft < f) {
        const double gain = f - ft;
        x = trial;
        r = r_trial;
        f = ft;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (gain <= options.tolerance * (1.0 + f)) small_step = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) {
        small_step = true;
        break;
      }
    }
    result.x = x;
    result.value = f;
    if (small_step) {
      result.converged = true;
      break;
    }
    if (!accepted) break;
  }
  result.x = x;
  result.value = f;
  return result;
}

void EstimationConfig::validate() const {
  if (!(lower < upper)) throw InvalidArgument("estimation: bounds must satisfy a < b");
  if (!(alpha1 > 0.0 && alpha1 < 1.0) || !(alpha2 > 0.0 && alpha2 < 1.0))
    throw InvalidArgument("estimation: alpha1 and alpha2 must lie in (0, 1)");
  if (!(tau_reduction_factor > 0.0 && tau_reduction_factor < 1.0))
    throw InvalidArgument("estimation: tau reduction factor must lie in (0, 1)");
  if (!(tilde_theta >= 0.0 && tilde_theta <= 1.0))
    throw InvalidArgument("estimation: reference theta must lie in [0, 1]");
  if (!(stage_margin >= 0.0)) throw InvalidArgument("estimation: stage margin must be nonnegative");
  if (optimizer.max_evaluations < 1) throw InvalidArgument("estimation: optimizer needs at least one evaluation");
}

SchemeParameters initial_parameters(const ReactionNetwork& network, const Vector& x0, double tau,
                                    const EstimationConfig& config) {
  auto theta_for = [&](double z) {
    const double th = config.solve_theta_exactly ? solve_theta_equation(z) : theta_from_relaxation(z);
    return std::clamp(th, config.lower, config.upper);
  };
  const std::size_t R = network.n_reactions();
  SchemeParameters p = SchemeParameters::constant(R, std::clamp(kThetaPrime, config.lower, config.upper),
                                                  std::clamp(1.0, config.lower, config.upper),
                                                  std::clamp(1.0, config.lower, config.upper), config.lower,
                                                  config.upper);
  const PairDetection detection = detect_reversible_pairs(network);
  for (const ReversiblePair& pair : detection.pairs) {
    const double th = theta_for(relaxation_rate(network, pair, x0) * tau);
    p.theta[static_cast<Eigen::Index>(pair.forward)] = th;
    p.theta[static_cast<Eigen::Index>(pair.backward)] = th;
  }
  for (std::size_t r : detection.unpaired) {
    const double rate = channel_relaxation_rate(network, r, x0);
    if (rate > 0.0) p.theta[static_cast<Eigen::Index>(r)] = theta_for(rate * tau);
  }
  return p;
}

EstimationState start_estimation(const ReactionNetwork& network, const Vector& x0, double tau,
                                 const EstimationConfig& config) {
  config.validate();
  if (!(tau > 0.0)) throw InvalidArgument("estimation: tau must be positive");
  if (x0.size() != static_cast<Eigen::Index>(network.n_species()))
    throw InvalidArgument("estimation: initial state has the wrong dimension");
  EstimationState s;
  s.tau = tau;
  s.initial = MomentPair::deterministic(x0);
  s.reference = s.initial;
  s.scheme = s.initial;
  s.lin = network.linearize_at(x0);
  s.params = initial_parameters(network, x0, tau, config);
  s.cold_params = s.params;
  return s;
}

namespace {

bool exceeds(double diff, double ref_norm, double alpha) { return diff > 0.0 && diff >= alpha * ref_norm; }

double relative_or_absolute(double diff, double ref_norm) { return ref_norm > 0.0 ? diff / ref_norm : diff; }

bool admissible(const SchemeMatrices& sm, const LinearizedPropensity& lin, const MomentPair& m, double tau,
                double margin) {
  const Vector mean_hat = sm.R1 * m.mu + tau * sm.r2;
  const Vector sd_hat = (sm.R1 * m.sigma * sm.R1.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt();
  const double slack = 1e-9 * std::max(1.0, m.mu.lpNorm<Eigen::Infinity>());
  return (mean_hat - margin * sd_hat).minCoeff() >= -slack && (lin.C * mean_hat + lin.d).minCoeff() >= -slack;
}

}  // namespace

StepRecord estimate_step(const ReactionNetwork& network, EstimationState& state, double t_final,
                         const EstimationConfig& config) {
  const Matrix& nu = network.stoichiometry();
  const double floor = config.tau_floor_fraction * t_final;
  int reductions = 0;
  while (true) {
    const double remaining = t_final - state.t;
    // Absorb a remainder that is only accumulated rounding into the last step.
    const double tau = state.tau >= remaining * (1.0 - 1e-9) ? remaining : state.tau;

    const ReferenceMatrices ref_m = reference_matrices(state.lin, nu, tau, config.tilde_theta);
    const MomentPair reference = reference_moment_step(ref_m, state.lin, nu, state.reference, tau);
    const LinearizedPropensity lin = network.linearize_at(reference.mu);

    auto predict = [&](const SchemeParameters& cand) {
      const SchemeMatrices sm = scheme_matrices(lin, nu, tau, cand);
      if (config.moments == ObjectiveMoments::Incremental) {
        if (config.admissible_stages && !admissible(sm, lin, state.scheme, tau, config.stage_margin))
          throw SingularStage("estimation: candidate stage mean is negative");
        return scheme_moment_step(sm, lin, nu, state.scheme, tau);
      }
      MomentPair m = state.initial;
      for (const auto& [tau_k, lin_k] : state.history) {
        const SchemeMatrices sm_k = scheme_matrices(lin_k, nu, tau_k, cand);
        if (config.admissible_stages && !admissible(sm_k, lin_k, m, tau_k, config.stage_margin))
          throw SingularStage("estimation: candidate stage mean is negative");
        m = scheme_moment_step(sm_k, lin_k, nu, m, tau_k);
      }
      if (config.admissible_stages && !admissible(sm, lin, m, tau, config.stage_margin))
        throw SingularStage("estimation: candidate stage mean is negative");
      return scheme_moment_step(sm, lin, nu, m, tau);
    };
    auto residual = [&](const Vector& packed) {
      const auto n = reference.mu.size();
      Vector r(n + n * n);
      try {
        const MomentPair pred = predict(SchemeParameters::unpack(packed, config.lower, config.upper));
        r << pred.mu - reference.mu, (pred.sigma - reference.sigma).reshaped();
      } catch (const Error&) {
        r.setConstant(std::numeric_limits<double>::infinity());
      }
      return r;
    };
    auto f = [&](const Vector& packed) {
      const double v = residual(packed).squaredNorm();
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    auto run = [&](const Vector& start) {
      return config.method == Optimizer::LevenbergMarquardt
                 ? minimize_least_squares_box(residual, start, config.lower, config.upper, config.optimizer)
                 : minimize_box(f, start, config.lower, config.upper, config.optimizer);
    };
    Vector start = state.params.packed();
    Vector other = state.cold_params.packed();
    if (f(other) < f(start)) std::swap(start, other);
    MinimizeResult best = run(start);
    if (!best.converged && other != start) {
      MinimizeResult second = run(other);
      if (second.value < best.value) best = std::move(second);
    }
    if (!std::isfinite(best.value)) throw SingularStage("estimation: every candidate produced singular stages");

    StepRecord rec;
    rec.params = SchemeParameters::unpack(best.x, config.lower, config.upper);
    rec.scheme = predict(rec.params);
    rec.reference = reference;
    rec.objective = best.value;
    rec.optimizer_converged = best.converged;
    const double mean_diff = (rec.scheme.mu - reference.mu).norm();
    const double cov_diff = (rec.scheme.sigma - reference.sigma).norm();
    const double mu_norm = reference.mu.norm();
    const double sigma_norm = reference.sigma.norm();
    rec.mean_error = relative_or_absolute(mean_diff, mu_norm);
    rec.cov_error = relative_or_absolute(cov_diff, sigma_norm);

    if (exceeds(mean_diff, mu_norm, config.alpha1) || exceeds(cov_diff, sigma_norm, config.alpha2)) {
      state.tau *= config.tau_reduction_factor;
      ++reductions;
      if (state.tau < floor) {
        std::ostringstream msg;
        msg << "estimation: tau fell below " << floor << " at t = " << state.t << " (mean error " << rec.mean_error
            << ", covariance error " << rec.cov_error << ")";
        throw TauUnderflow(msg.str());
      }
      continue;
    }

    // Land exactly on t_final when the step was clipped.
    state.t = (tau == remaining) ? t_final : state.t + tau;
    rec.t = state.t;
    rec.tau = tau;
    rec.tau_reductions = reductions;
    state.reference = reference;
    state.scheme = rec.scheme;
    state.lin = lin;
    state.params = rec.params;
    if (config.moments == ObjectiveMoments::CandidateThroughout) state.history.emplace_back(tau, lin);
    return rec;
  }
}

ParameterTrajectory run_estimation(const ReactionNetwork& network, const Vector& x0, double tau, double t_final,
                                   const EstimationConfig& config) {
  if (!(t_final > 0.0)) throw InvalidArgument("estimation: t_final must be positive");
  EstimationState state = start_estimation(network, x0, tau, config);
  ParameterTrajectory traj;
  traj.initial = state.params;
  // A remainder below this is rounding noise from accumulating t.
  const double slack = 1e-9 * std::min(tau, t_final);
  while (t_final - state.t > slack) {
    traj.steps.push_back(estimate_step(network, state, t_final, config));
    traj.tau_reductions += traj.steps.back().tau_reductions;
  }
  return traj;
}

}  // namespace splitleap
