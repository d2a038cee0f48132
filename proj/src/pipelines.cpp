#include "splitleap/pipelines.hpp"

#include <cmath>

#include "splitleap/errors.hpp"
#include "splitleap/moments.hpp"
#include "splitleap/network_io.hpp"

namespace splitleap {

std::vector<double> uniform_grid(double t_final, std::size_t points) {
  if (!(t_final > 0.0) || points == 0) throw InvalidArgument("uniform_grid: need t_final > 0 and points >= 1");
  std::vector<double> grid(points + 1);
  for (std::size_t k = 0; k <= points; ++k)
    grid[k] = t_final * static_cast<double>(k) / static_cast<double>(points);
  grid.back() = t_final;
  return grid;
}

std::vector<PlannedStep> build_plan(const ReactionNetwork& network, const SchemeSpec& scheme, const Vector& x0,
                                    double tau, double t_final, const EstimationConfig& estimation,
                                    std::optional<ParameterTrajectory>* trajectory) {
  if (scheme.kind == SchemeKind::Ssa) return {};
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive for " + scheme.canonical());
  if (scheme.kind != SchemeKind::SlowScale)
    return uniform_plan(tau, t_final, SchemeParameters::constant(network.n_reactions(), 0.0, 0.0, 0.0));
  ParameterTrajectory traj = run_estimation(network, x0, tau, t_final, estimation);
  std::vector<PlannedStep> plan;
  plan.reserve(traj.steps.size());
  for (const StepRecord& r : traj.steps) plan.push_back({r.tau, r.params});
  if (trajectory) *trajectory = std::move(traj);
  return plan;
}

CsvTable moments_table(const std::string& comment, const std::vector<std::string>& species,
                       const std::vector<double>& times, const std::vector<Vector>& means,
                       const std::vector<Matrix>& covariances, const std::vector<Vector>* standard_errors) {
  std::vector<std::string> header{"time"};
  for (const auto& s : species) header.push_back("mean_" + s);
  if (standard_errors)
    for (const auto& s : species) header.push_back("se_" + s);
  for (std::size_t i = 0; i < species.size(); ++i)
    for (std::size_t j = i; j < species.size(); ++j) header.push_back("cov_" + species[i] + "_" + species[j]);
  CsvTable table(comment, header);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k]};
    for (Eigen::Index i = 0; i < means[k].size(); ++i) row.push_back(means[k][i]);
    if (standard_errors)
      for (Eigen::Index i = 0; i < means[k].size(); ++i) row.push_back((*standard_errors)[k][i]);
    for (Eigen::Index i = 0; i < covariances[k].rows(); ++i)
      for (Eigen::Index j = i; j < covariances[k].cols(); ++j) row.push_back(covariances[k](i, j));
    table.add_row(row);
  }
  return table;
}

CsvTable histogram_table(const std::string& comment, const Histogram& histogram) {
  CsvTable table(comment, {"value", "count"});
  for (const auto& [v, c] : histogram) table.add_row({std::to_string(v), std::to_string(c)});
  return table;
}

CsvTable parameters_table(const std::string& comment, const ParameterTrajectory& trajectory) {
  std::vector<std::string> header{"t", "tau", "objective", "mean_error", "cov_error", "converged", "tau_reductions"};
  const auto R = static_cast<Eigen::Index>(trajectory.initial.channels());
  for (const char* name : {"theta", "eta1", "eta2"})
    for (Eigen::Index r = 0; r < R; ++r) header.push_back(std::string(name) + "_" + std::to_string(r + 1));
  CsvTable table(comment, header);
  for (const StepRecord& s : trajectory.steps) {
    std::vector<std::string> row{format_number(s.t),          format_number(s.tau),
                                 format_number(s.objective),  format_number(s.mean_error),
                                 format_number(s.cov_error),  s.optimizer_converged ? "1" : "0",
                                 std::to_string(s.tau_reductions)};
    for (const Vector* v : {&s.params.theta, &s.params.eta1, &s.params.eta2})
      for (Eigen::Index r = 0; r < R; ++r) row.push_back(format_number((*v)[r]));
    table.add_row(std::move(row));
  }
  return table;
}

CsvTable stability_table(const std::string& comment, const std::vector<double>& thetas,
                         const std::vector<double>& eta1s, const std::vector<double>& eta2s,
                         const std::vector<double>& zs) {
  CsvTable table(comment, {"theta", "eta1", "eta2", "z", "P", "A", "stable", "theta_P", "theta_A", "theta_stable"});
  for (double th : thetas)
    for (double e1 : eta1s)
      for (double e2 : eta2s)
        for (double z : zs) {
          const StabilityReport tr = theta_oracle(th, z);
          std::vector<std::string> row{format_number(th), format_number(e1), format_number(e2), format_number(z)};
          try {
            const StabilityReport sr = split_step_oracle(th, e1, e2, z);
            row.insert(row.end(), {format_number(sr.propagation), format_number(sr.amplifier), sr.stable ? "1" : "0"});
          } catch (const DivisionByZero&) {
            row.insert(row.end(), {"nan", "nan", "0"});
          }
          row.insert(row.end(), {format_number(tr.propagation), format_number(tr.amplifier), tr.stable ? "1" : "0"});
          table.add_row(std::move(row));
        }
  return table;
}

CsvBundle ensemble_files(const std::string& comment, const ReactionNetwork& network, const EnsembleStats& stats,
                         const std::string& prefix) {
  CsvBundle files;
  files[prefix + "moments.csv"] =
      moments_table(comment, network.species(), stats.times, stats.mean, stats.covariance, &stats.mean_se).str();
  for (std::size_t h = 0; h < stats.histogram_times.size(); ++h)
    for (std::size_t i = 0; i < network.n_species(); ++i)
      files[prefix + "hist_" + network.species()[i] + "_" + format_number(stats.histogram_times[h]) + ".csv"] =
          histogram_table(comment, stats.histograms[h][i]).str();
  return files;
}

namespace {

std::string join_counts(const State& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + std::to_string(x[i]);
  return s;
}

std::vector<std::pair<std::string, std::string>> estimation_fields(const EstimationConfig& e) {
  return {{"alpha1", format_number(e.alpha1)},
          {"alpha2", format_number(e.alpha2)},
          {"bounds", format_number(e.lower) + ";" + format_number(e.upper)},
          {"tau_reduction", format_number(e.tau_reduction_factor)},
          {"reference_theta", format_number(e.tilde_theta)},
          {"objective_moments", e.moments == ObjectiveMoments::Incremental ? "incremental" : "candidate"},
          {"theta_init", e.solve_theta_exactly ? "root" : "fit"},
          {"stage_margin", e.admissible_stages ? format_number(e.stage_margin) : "off"},
          {"optimizer", e.method == Optimizer::NelderMead ? "nelder-mead" : "levenberg-marquardt"}};
}

std::string simulate_comment(const std::string& command, const SimulateConfig& c) {
  std::vector<std::pair<std::string, std::string>> f{{"network", c.network_label},
                                                     {"x0", join_counts(c.x0)},
                                                     {"scheme", c.scheme.canonical()},
                                                     {"tau", format_number(c.tau)},
                                                     {"t_final", format_number(c.t_final)},
                                                     {"samples", std::to_string(c.samples)},
                                                     {"seed", std::to_string(c.seed)},
                                                     {"grid_points", std::to_string(c.grid_points)}};
  for (auto& kv : estimation_fields(c.estimation)) f.push_back(std::move(kv));
  return config_comment(command, f);
}

EnsembleStats run_scheme(const ReactionNetwork& network, const State& x0, const SchemeSpec& scheme,
                         std::vector<PlannedStep> plan, double t_final, const std::vector<double>& grid,
                         std::size_t samples, std::uint64_t seed, unsigned workers) {
  EnsembleConfig ec;
  ec.scheme = scheme;
  ec.plan = std::move(plan);
  ec.t_final = t_final;
  ec.n_samples = samples;
  ec.seed = seed;
  ec.grid = grid;
  ec.histogram_times = {grid.back()};
  ec.workers = workers;
  return run_ensemble(network, x0, ec);
}

}  // namespace

SimulateResult simulate(const ReactionNetwork& network, const SimulateConfig& config) {
  if (config.x0.size() != network.n_species())
    throw InvalidArgument("initial state has " + std::to_string(config.x0.size()) + " entries, network has " +
                          std::to_string(network.n_species()) + " species");
  SimulateResult result;
  const auto plan = build_plan(network, config.scheme, config.x0.as_vector(), config.tau, config.t_final,
                               config.estimation, &result.trajectory);
  const auto grid = uniform_grid(config.t_final, config.grid_points);
  result.stats = run_scheme(network, config.x0, config.scheme, plan, config.t_final, grid, config.samples,
                            config.seed, config.workers);
  const std::string comment = simulate_comment("simulate", config);
  result.files = ensemble_files(comment, network, result.stats);
  if (result.trajectory) result.files["parameters.csv"] = parameters_table(comment, *result.trajectory).str();
  return result;
}

CsvBundle moments_pipeline(const ReactionNetwork& network, const SimulateConfig& config) {
  if (!(config.tau > 0.0)) throw InvalidArgument("moments: tau must be positive");
  const Matrix& nu = network.stoichiometry();
  const Vector x0 = config.x0.as_vector();
  const std::string comment = simulate_comment("moments", config);
  CsvBundle files;

  std::vector<double> times{0.0};
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  MomentPair m = MomentPair::deterministic(x0);
  means.push_back(m.mu);
  covs.push_back(m.sigma);
  for (const PlannedStep& s : uniform_plan(config.tau, config.t_final, {})) {
    const LinearizedPropensity lin = network.linearize_at(m.mu);
    m = reference_moment_step(reference_matrices(lin, nu, s.tau, config.estimation.tilde_theta), lin, nu, m, s.tau);
    times.push_back(times.back() + s.tau);
    means.push_back(m.mu);
    covs.push_back(m.sigma);
  }
  times.back() = config.t_final;
  files["reference_moments.csv"] = moments_table(comment, network.species(), times, means, covs).str();

  if (config.scheme.kind == SchemeKind::Ssa) return files;
  std::optional<ParameterTrajectory> traj;
  const auto plan =
      build_plan(network, config.scheme, x0, config.tau, config.t_final, config.estimation, &traj);
  times.assign(1, 0.0);
  means.assign(1, x0);
  covs.assign(1, Matrix::Zero(x0.size(), x0.size()));
  m = MomentPair::deterministic(x0);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const PlannedStep& s = plan[k];
    if (config.scheme.kind == SchemeKind::SlowScale) {
      m = traj->steps[k].scheme;
    } else {
      const LinearizedPropensity lin = network.linearize_at(m.mu);
      if (config.scheme.kind == SchemeKind::Theta) {
        m = theta_moment_step(lin, nu, m, s.tau, config.scheme.theta);
      } else {
        const auto p = SchemeParameters::constant(network.n_reactions(), 0.0, config.scheme.theta, 1.0);
        m = scheme_moment_step(scheme_matrices(lin, nu, s.tau, p), lin, nu, m, s.tau);
      }
    }
    times.push_back(times.back() + s.tau);
    means.push_back(m.mu);
    covs.push_back(m.sigma);
  }
  times.back() = config.t_final;
  files["scheme_moments.csv"] = moments_table(comment, network.species(), times, means, covs).str();
  if (traj) files["parameters.csv"] = parameters_table(comment, *traj).str();
  return files;
}

CsvBundle estimate_pipeline(const ReactionNetwork& network, const SimulateConfig& config) {
  const ParameterTrajectory traj =
      run_estimation(network, config.x0.as_vector(), config.tau, config.t_final, config.estimation);
  return {{"parameters.csv", parameters_table(simulate_comment("estimate", config), traj).str()}};
}

namespace {

const std::array<const char*, 3> kComparedSchemes = {"implicit", "trapezoidal", "slow-scale"};

std::string rates_text(const std::array<double, 6>& rates) {
  std::string s;
  for (std::size_t r = 0; r < rates.size(); ++r) s += (r ? ";" : "") + format_number(rates[r]);
  return s;
}

State chain_start(std::int64_t x_T) { return State{x_T, 0, 0, 0}; }

}  // namespace

std::vector<SweepRow> example1_sweep(const Example1Config& config) {
  constexpr double tau = 1.0;
  constexpr double t_final = 100.0;
  std::vector<SweepRow> rows;
  for (double alpha : config.sweep_alphas) {
    if (!(alpha > 0.0)) throw InvalidArgument("example1: alpha must be positive");
    std::array<double, 6> rates;
    rates.fill(alpha);
    const ReactionNetwork net = monomolecular_chain(rates);
    const State x0 = chain_start(config.x_T);
    const StationaryLaw exact = monomolecular_solution(net, config.x_T, t_final);
    for (const char* name : {"implicit", "slow-scale"}) {
      const SchemeSpec spec = parse_scheme(name);
      const auto plan = build_plan(net, spec, x0.as_vector(), tau, t_final, config.estimation);
      const EnsembleStats stats =
          run_scheme(net, x0, spec, plan, t_final, {t_final}, config.sweep_samples, config.seed, config.workers);
      rows.push_back({alpha, name, compare(stats, exact)});
    }
  }
  return rows;
}

Example1Result example1(const Example1Config& config) {
  for (double c : config.rates)
    if (!(c > 0.0)) throw InvalidArgument("example1: rates must be positive");
  if (config.x_T < 0) throw InvalidArgument("example1: x_T must be nonnegative");
  const ReactionNetwork net = monomolecular_chain(config.rates);
  const State x0 = chain_start(config.x_T);
  std::vector<std::pair<std::string, std::string>> fields{{"rates", rates_text(config.rates)},
                                                          {"x_T", std::to_string(config.x_T)},
                                                          {"tau", format_number(config.tau)},
                                                          {"t_final", format_number(config.t_final)},
                                                          {"samples", std::to_string(config.samples)},
                                                          {"seed", std::to_string(config.seed)},
                                                          {"grid_points", std::to_string(config.grid_points)}};
  for (auto& kv : estimation_fields(config.estimation)) fields.push_back(std::move(kv));
  const std::string comment = config_comment("example1", fields);

  Example1Result result;
  const auto grid = uniform_grid(config.t_final, config.grid_points);
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (double t : grid) {
    StationaryLaw law = monomolecular_solution(net, config.x_T, t);
    means.push_back(law.mean);
    covs.push_back(law.covariance);
    if (t == grid.back()) result.exact = std::move(law);
  }
  result.files["exact_moments.csv"] = moments_table(comment, net.species(), grid, means, covs).str();
  if (!result.exact.marginal_pmf.empty()) {
    std::vector<std::string> header{"value"};
    for (const auto& s : net.species()) header.push_back("p_" + s);
    CsvTable table(comment, header);
    for (std::int64_t v = 0; v <= config.x_T; ++v) {
      std::vector<double> row{static_cast<double>(v)};
      for (const auto& pmf : result.exact.marginal_pmf) row.push_back(pmf[static_cast<std::size_t>(v)]);
      table.add_row(row);
    }
    result.files["exact_marginals.csv"] = table.str();
  }

  CsvTable errors(comment, {"scheme", "mean_error", "cov_error", "zero_reference"});
  for (const char* name : kComparedSchemes) {
    const SchemeSpec spec = parse_scheme(name);
    std::optional<ParameterTrajectory> traj;
    const auto plan = build_plan(net, spec, x0.as_vector(), config.tau, config.t_final, config.estimation, &traj);
    if (traj) {
      result.trajectory = *traj;
      result.files["parameters.csv"] = parameters_table(comment, *traj).str();
    }
    EnsembleStats stats =
        run_scheme(net, x0, spec, plan, config.t_final, grid, config.samples, config.seed, config.workers);
    for (auto& [file, text] : ensemble_files(comment, net, stats, std::string(name) + "/")) result.files[file] = text;
    const ErrorReport e = compare(stats, result.exact);
    errors.add_row({name, format_number(e.mean_error), format_number(e.cov_error), e.zero_reference ? "1" : "0"});
    result.stats[name] = std::move(stats);
  }
  result.files["errors.csv"] = errors.str();

  if (config.sweep) {
    result.sweep = example1_sweep(config);
    std::vector<std::pair<std::string, std::string>> sweep_fields{{"x_T", std::to_string(config.x_T)},
                                                                  {"tau", "1"},
                                                                  {"t_final", "100"},
                                                                  {"samples", std::to_string(config.sweep_samples)},
                                                                  {"seed", std::to_string(config.seed)}};
    for (auto& kv : estimation_fields(config.estimation)) sweep_fields.push_back(std::move(kv));
    CsvTable sweep(config_comment("example1-sweep", sweep_fields), {"alpha", "scheme", "mean_error", "cov_error"});
    for (const SweepRow& r : result.sweep)
      sweep.add_row({format_number(r.alpha), r.scheme, format_number(r.error.mean_error),
                     format_number(r.error.cov_error)});
    result.files["error_sweep.csv"] = sweep.str();
  }
  return result;
}

Example2Result example2(const Example2Config& config) {
  const ReactionNetwork net = stiff_nonlinear_network(config.rates);
  const State x0{config.x0[0], config.x0[1], config.x0[2]};
  std::vector<std::pair<std::string, std::string>> fields{{"rates", rates_text(config.rates)},
                                                          {"x0", join_counts(x0)},
                                                          {"tau", format_number(config.tau)},
                                                          {"t_final", format_number(config.t_final)},
                                                          {"samples", std::to_string(config.samples)},
                                                          {"ssa_samples", std::to_string(config.ssa_samples)},
                                                          {"seed", std::to_string(config.seed)},
                                                          {"grid_points", std::to_string(config.grid_points)}};
  for (auto& kv : estimation_fields(config.estimation)) fields.push_back(std::move(kv));
  const std::string comment = config_comment("example2", fields);
  const auto grid = uniform_grid(config.t_final, config.grid_points);

  Example2Result result;
  CsvTable summary(comment, {"scheme", "species", "mean", "se", "variance"});
  auto add = [&](const std::string& name, EnsembleStats stats) {
    for (auto& [file, text] : ensemble_files(comment, net, stats, name + "/")) result.files[file] = text;
    for (std::size_t i = 0; i < net.n_species(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      summary.add_row({name, net.species()[i], format_number(stats.mean.back()[ii]),
                       format_number(stats.mean_se.back()[ii]), format_number(stats.covariance.back()(ii, ii))});
    }
    result.stats[name] = std::move(stats);
  };

  add("ssa", run_scheme(net, x0, parse_scheme("ssa"), {}, config.t_final, grid, config.ssa_samples, config.seed,
                        config.workers));
  for (const char* name : kComparedSchemes) {
    const SchemeSpec spec = parse_scheme(name);
    std::optional<ParameterTrajectory> traj;
    const auto plan = build_plan(net, spec, x0.as_vector(), config.tau, config.t_final, config.estimation, &traj);
    if (traj) {
      result.trajectory = *traj;
      result.files["parameters.csv"] = parameters_table(comment, *traj).str();
    }
    add(name, run_scheme(net, x0, spec, plan, config.t_final, grid, config.samples, config.seed, config.workers));
  }
  result.files["summary.csv"] = summary.str();
  return result;
}

}  // namespace splitleap
