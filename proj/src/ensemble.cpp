#include "splitleap/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "splitleap/errors.hpp"
#include "splitleap/ssa.hpp"

namespace splitleap {

std::vector<PlannedStep> uniform_plan(double tau, double t_final, const SchemeParameters& params) {
  if (!(tau > 0.0) || !(t_final > 0.0)) throw InvalidArgument("uniform_plan: tau and t_final must be positive");
  const double steps = t_final / tau;
  auto n = static_cast<std::size_t>(std::llround(steps));
  if (std::fabs(steps - static_cast<double>(n)) > 1e-9 * std::max(1.0, steps)) n = static_cast<std::size_t>(std::ceil(steps));
  std::vector<PlannedStep> plan(n, PlannedStep{tau, params});
  const double rest = t_final - tau * static_cast<double>(n - 1);
  if (std::fabs(rest - tau) > 1e-9 * tau) plan.back().tau = rest;
  return plan;
}

namespace {

constexpr std::size_t kChunkSize = 256;

struct ChunkResult {
  std::size_t n = 0;
  std::vector<Vector> mean;
  std::vector<Matrix> m2;
  std::vector<std::vector<Histogram>> hist;
  std::vector<std::vector<Vector>> samples;  // [grid][path]
  std::size_t failures = 0;
  std::uint64_t events = 0;
  std::exception_ptr error;
};

struct Layout {
  std::size_t n_species = 0;
  std::vector<double> step_end;          // t_k, k = 0..K
  std::vector<std::size_t> grid_step;    // grid index -> k
  std::vector<std::size_t> hist_grid;    // histogram index -> grid index
  std::size_t steps_needed = 0;
};

Layout make_layout(const ReactionNetwork& network, const EnsembleConfig& cfg) {
  Layout L;
  L.n_species = network.n_species();
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    if (cfg.grid[g] < 0.0 || cfg.grid[g] > cfg.t_final * (1.0 + 1e-12))
      throw InvalidArgument("run_ensemble: grid time outside [0, t_final]");
    if (g > 0 && !(cfg.grid[g] > cfg.grid[g - 1])) throw InvalidArgument("run_ensemble: grid must be increasing");
  }
  for (double h : cfg.histogram_times) {
    auto it = std::find(cfg.grid.begin(), cfg.grid.end(), h);
    if (it == cfg.grid.end()) throw InvalidArgument("run_ensemble: histogram time not on the output grid");
    L.hist_grid.push_back(static_cast<std::size_t>(it - cfg.grid.begin()));
  }
  if (cfg.scheme.kind == SchemeKind::Ssa) return L;

  if (cfg.plan.empty()) throw InvalidArgument("run_ensemble: tau scheme needs a step plan");
  L.step_end.push_back(0.0);
  double min_tau = cfg.plan.front().tau;
  for (const PlannedStep& s : cfg.plan) {
    if (!(s.tau > 0.0)) throw InvalidArgument("run_ensemble: nonpositive step in plan");
    if (cfg.scheme.kind == SchemeKind::SlowScale &&
        (s.params.channels() != network.n_reactions() || !s.params.valid()))
      throw InvalidArgument("run_ensemble: plan parameters invalid or of the wrong size");
    L.step_end.push_back(L.step_end.back() + s.tau);
    min_tau = std::min(min_tau, s.tau);
  }
  const double slack = 1e-9 * min_tau;
  for (double g : cfg.grid) {
    if (g > L.step_end.back() + slack) throw InvalidArgument("run_ensemble: plan ends before the last grid time");
    auto it = std::upper_bound(L.step_end.begin(), L.step_end.end(), g + slack);
    const auto k = static_cast<std::size_t>(it - L.step_end.begin()) - 1;
    L.grid_step.push_back(k);
    L.steps_needed = std::max(L.steps_needed, k);
  }
  return L;
}

void record(ChunkResult& acc, std::size_t g, const Vector& x) {
  // Welford update; acc.n already counts this path.
  const double n = static_cast<double>(acc.n);
  const Vector delta = x - acc.mean[g];
  acc.mean[g] += delta / n;
  acc.m2[g].noalias() += delta * (x - acc.mean[g]).transpose();
}

void run_chunk(const ReactionNetwork& network, const State& x0, const EnsembleConfig& cfg, const Layout& L,
               std::size_t first, std::size_t last, ChunkResult& out) {
  const std::size_t G = cfg.grid.size();
  const auto N = static_cast<Eigen::Index>(L.n_species);
  out.mean.assign(G, Vector::Zero(N));
  out.m2.assign(G, Matrix::Zero(N, N));
  out.hist.assign(L.hist_grid.size(), std::vector<Histogram>(L.n_species));
  if (cfg.keep_samples) out.samples.assign(G, {});

  std::vector<Vector> path(G, Vector(N));
  std::vector<State> ssa_states;
  const Vector y0 = x0.as_vector();
  for (std::size_t p = first; p < last; ++p) {
    RngStream stream(cfg.seed, p);
    if (cfg.scheme.kind == SchemeKind::Ssa) {
      out.events += ssa_grid_path(network, x0, cfg.t_final, cfg.grid, stream, ssa_states);
      for (std::size_t g = 0; g < G; ++g) path[g] = ssa_states[g].as_vector();
    } else {
      try {
        Vector y = y0;
        std::size_t g = 0;
        for (std::size_t k = 0;; ++k) {
          while (g < G && L.grid_step[g] == k) path[g++] = y;
          if (k == L.steps_needed) break;
          const PlannedStep& s = cfg.plan[k];
          y = scheme_step(network, cfg.scheme, y, s.tau, s.params, stream, cfg.step_options).next;
        }
      } catch (const NewtonDivergence&) {
        ++out.failures;
        continue;
      }
    }
    ++out.n;
    for (std::size_t g = 0; g < G; ++g) record(out, g, path[g]);
    for (std::size_t h = 0; h < L.hist_grid.size(); ++h) {
      const Vector& x = path[L.hist_grid[h]];
      for (std::size_t i = 0; i < L.n_species; ++i) ++out.hist[h][i][std::llround(x[static_cast<Eigen::Index>(i)])];
    }
    if (cfg.keep_samples)
      for (std::size_t g = 0; g < G; ++g) out.samples[g].push_back(path[g]);
  }
}

void merge(ChunkResult& into, ChunkResult& from) {
  if (from.n > 0) {
    if (into.n == 0) {
      into.mean = from.mean;
      into.m2 = from.m2;
    } else {
      const double na = static_cast<double>(into.n);
      const double nb = static_cast<double>(from.n);
      const double n = na + nb;
      for (std::size_t g = 0; g < into.mean.size(); ++g) {
        const Vector delta = from.mean[g] - into.mean[g];
        into.mean[g] += delta * (nb / n);
        into.m2[g] += from.m2[g] + delta * delta.transpose() * (na * nb / n);
      }
    }
  }
  into.n += from.n;
  into.failures += from.failures;
  into.events += from.events;
  for (std::size_t h = 0; h < from.hist.size(); ++h)
    for (std::size_t i = 0; i < from.hist[h].size(); ++i)
      for (const auto& [v, c] : from.hist[h][i]) into.hist[h][i][v] += c;
  for (std::size_t g = 0; g < from.samples.size(); ++g)
    into.samples[g].insert(into.samples[g].end(), from.samples[g].begin(), from.samples[g].end());
}

}  // namespace

EnsembleStats run_ensemble(const ReactionNetwork& network, const State& x0, const EnsembleConfig& config) {
  if (config.n_samples < 1) throw InvalidArgument("run_ensemble: n_samples must be at least 1");
  if (!(config.t_final > 0.0)) throw InvalidArgument("run_ensemble: t_final must be positive");
  if (x0.size() != network.n_species() || !x0.valid())
    throw InvalidArgument("run_ensemble: initial state invalid or of the wrong size");
  const Layout L = make_layout(network, config);

  const std::size_t chunks = (config.n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkResult> results(chunks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      try {
        run_chunk(network, x0, config, L, c * kChunkSize, std::min(config.n_samples, (c + 1) * kChunkSize),
                  results[c]);
      } catch (...) {
        results[c].error = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(chunks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const ChunkResult& r : results)
    if (r.error) std::rethrow_exception(r.error);

  ChunkResult total;
  const auto N = static_cast<Eigen::Index>(L.n_species);
  total.mean.assign(config.grid.size(), Vector::Zero(N));
  total.m2.assign(config.grid.size(), Matrix::Zero(N, N));
  total.hist.assign(L.hist_grid.size(), std::vector<Histogram>(L.n_species));
  if (config.keep_samples) total.samples.assign(config.grid.size(), {});
  for (ChunkResult& r : results) merge(total, r);

  if (static_cast<double>(total.failures) > config.max_failure_fraction * static_cast<double>(config.n_samples) ||
      total.n == 0) {
    std::ostringstream msg;
    msg << "run_ensemble: " << total.failures << " of " << config.n_samples
        << " paths failed in the implicit stage solve";
    throw EnsembleFailure(msg.str());
  }

  EnsembleStats stats;
  stats.times = config.grid;
  stats.histogram_times = config.histogram_times;
  stats.n_samples = total.n;
  stats.failures = total.failures;
  stats.ssa_events = total.events;
  const double n = static_cast<double>(total.n);
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    Matrix cov = total.n > 1 ? Matrix(total.m2[g] / (n - 1.0)) : Matrix::Zero(N, N);
    cov = 0.5 * (cov + cov.transpose()).eval();
    stats.mean.push_back(total.mean[g]);
    stats.mean_se.push_back((cov.diagonal().cwiseMax(0.0) / n).cwiseSqrt());
    stats.covariance.push_back(std::move(cov));
  }
  stats.histograms = std::move(total.hist);
  if (config.keep_samples) {
    for (const auto& rows : total.samples) {
      Matrix m(static_cast<Eigen::Index>(rows.size()), N);
      for (std::size_t p = 0; p < rows.size(); ++p) m.row(static_cast<Eigen::Index>(p)) = rows[p].transpose();
      stats.samples.push_back(std::move(m));
    }
  }
  return stats;
}

namespace {

ErrorReport compare_moments(const EnsembleStats& stats, const Vector& mu, const Matrix& sigma) {
  if (stats.times.empty()) throw InvalidArgument("compare: empty statistics");
  const Vector& m = stats.mean.back();
  const Matrix& c = stats.covariance.back();
  if (m.size() != mu.size() || c.rows() != sigma.rows() || c.cols() != sigma.cols())
    throw InvalidArgument("compare: dimension mismatch");
  ErrorReport rep;
  const double mu_norm = mu.norm();
  const double sigma_norm = sigma.norm();
  rep.mean_error = (m - mu).norm();
  rep.cov_error = (c - sigma).norm();
  if (mu_norm > 0.0) rep.mean_error /= mu_norm; else rep.zero_reference = true;
  if (sigma_norm > 0.0) rep.cov_error /= sigma_norm; else rep.zero_reference = true;
  return rep;
}

}  // namespace

ErrorReport compare(const EnsembleStats& stats, const MomentPair& reference) {
  return compare_moments(stats, reference.mu, reference.sigma);
}

ErrorReport compare(const EnsembleStats& stats, const StationaryLaw& reference) {
  return compare_moments(stats, reference.mean, reference.covariance);
}

std::map<std::int64_t, double> marginal_histogram(const EnsembleStats& stats, std::size_t species, double time) {
  auto it = std::find(stats.histogram_times.begin(), stats.histogram_times.end(), time);
  if (it == stats.histogram_times.end()) throw InvalidArgument("marginal_histogram: time has no histogram");
  const auto& h = stats.histograms[static_cast<std::size_t>(it - stats.histogram_times.begin())];
  if (species >= h.size()) throw InvalidArgument("marginal_histogram: species out of range");
  std::uint64_t total = 0;
  for (const auto& [v, c] : h[species]) total += c;
  std::map<std::int64_t, double> pmf;
  for (const auto& [v, c] : h[species]) pmf[v] = static_cast<double>(c) / static_cast<double>(total);
  return pmf;
}

double total_variation(const std::map<std::int64_t, double>& estimate, const std::vector<double>& exact) {
  double sum = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    auto it = estimate.find(static_cast<std::int64_t>(k));
    sum += std::fabs((it == estimate.end() ? 0.0 : it->second) - exact[k]);
  }
  for (const auto& [v, p] : estimate)
    if (v < 0 || v >= static_cast<std::int64_t>(exact.size())) sum += p;
  return 0.5 * sum;
}

}  // namespace splitleap
