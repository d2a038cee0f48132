#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splitleap/errors.hpp"
#include "splitleap/network_io.hpp"
#include "splitleap/pipelines.hpp"

using namespace splitleap;

namespace {

struct CommonFlags {
  std::string network;
  std::vector<std::int64_t> x0;
  std::string scheme = "slow-scale";
  double tau = 0.0;
  double t_final = 1.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t grid_points = 10;
  std::string out = "out";
};

struct EstimationFlags {
  std::optional<double> alpha1;
  std::optional<double> alpha2;
  std::vector<double> bounds;
  std::string optimizer;
  bool exact_theta = false;
  bool candidate_moments = false;
};

void add_estimation(CLI::App* cmd, EstimationFlags& e) {
  cmd->add_option("--alpha1", e.alpha1, "Relative mean error threshold");
  cmd->add_option("--alpha2", e.alpha2, "Relative covariance error threshold");
  cmd->add_option("--bounds", e.bounds, "Parameter box a b")->expected(2);
  cmd->add_option("--optimizer", e.optimizer, "nelder-mead or levenberg-marquardt")
      ->check(CLI::IsMember({"nelder-mead", "levenberg-marquardt"}));
  cmd->add_flag("--exact-theta", e.exact_theta, "Initialize theta with the root-finder");
  cmd->add_flag("--candidate-moments", e.candidate_moments,
                "Iterate each candidate from the initial condition in the objective");
}

EstimationConfig to_config(const EstimationFlags& e, const EstimationConfig& defaults = {}) {
  EstimationConfig c = defaults;
  c.alpha1 = e.alpha1.value_or(defaults.alpha1);
  c.alpha2 = e.alpha2.value_or(defaults.alpha2);
  if (!e.bounds.empty()) {
    c.lower = e.bounds.at(0);
    c.upper = e.bounds.at(1);
  }
  if (!e.optimizer.empty())
    c.method = e.optimizer == "nelder-mead" ? Optimizer::NelderMead : Optimizer::LevenbergMarquardt;
  c.solve_theta_exactly = e.exact_theta;
  c.moments = e.candidate_moments ? ObjectiveMoments::CandidateThroughout : ObjectiveMoments::Incremental;
  c.validate();
  return c;
}

void add_run(CLI::App* cmd, CommonFlags& f, bool sampling) {
  cmd->add_option("--network", f.network, "Network JSON file")->required();
  cmd->add_option("--x0", f.x0, "Initial counts, comma separated")->required()->delimiter(',');
  cmd->add_option("--scheme", f.scheme, "ssa | explicit | implicit | trapezoidal | theta:<v> | split-step:<v> | slow-scale");
  cmd->add_option("--tau", f.tau, "Time step");
  cmd->add_option("--t-final", f.t_final, "Final time");
  cmd->add_option("--out", f.out, "Output directory");
  if (sampling) {
    cmd->add_option("--samples", f.samples, "Number of paths");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--workers", f.workers, "Worker threads");
    cmd->add_option("--grid-points", f.grid_points, "Output intervals on [0, t-final]");
  }
}

std::string stage = "startup";

SimulateConfig load_run(const CommonFlags& f, const EstimationFlags& e, ReactionNetwork*& net_out,
                        std::unique_ptr<ReactionNetwork>& holder) {
  stage = "loading network";
  holder = std::make_unique<ReactionNetwork>(load_network(f.network));
  net_out = holder.get();
  for (const auto& w : holder->warnings()) std::cerr << "warning: " << w << '\n';
  stage = "reading options";
  SimulateConfig c;
  c.network_label = f.network;
  c.x0 = State(f.x0);
  c.scheme = parse_scheme(f.scheme);
  c.tau = f.tau;
  c.t_final = f.t_final;
  c.samples = f.samples;
  c.seed = f.seed;
  c.workers = f.workers;
  c.grid_points = f.grid_points;
  c.estimation = to_config(e);
  if (!(c.t_final > 0.0)) throw InvalidArgument("--t-final must be positive");
  if (c.samples < 1) throw InvalidArgument("--samples must be at least 1");
  if (c.scheme.kind != SchemeKind::Ssa && !(c.tau > 0.0)) throw InvalidArgument("--tau must be positive");
  if (!c.x0.valid()) throw InvalidArgument("--x0 must be nonnegative");
  return c;
}

void write(const CsvBundle& files, const std::string& dir) {
  stage = "writing output";
  write_bundle(files, dir);
  for (const auto& [name, content] : files) std::cout << dir << "/" << name << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic simulation of stiff chemical reaction networks"};
  app.require_subcommand(1);

  CommonFlags run;
  EstimationFlags est;
  auto* sim = app.add_subcommand("simulate", "Run a path ensemble and write moments and histograms");
  add_run(sim, run, true);
  add_estimation(sim, est);
  auto* mom = app.add_subcommand("moments", "Write the linearized reference and scheme moment recursions");
  add_run(mom, run, false);
  add_estimation(mom, est);
  auto* estc = app.add_subcommand("estimate", "Estimate split-step parameters along [0, t-final]");
  add_run(estc, run, false);
  add_estimation(estc, est);

  std::vector<double> thetas{0.0, 0.5, 1.0}, eta1s{1.0}, eta2s{1.0}, zs{0.1, 1.0, 10.0, 100.0};
  std::string table_out;
  auto* stab = app.add_subcommand("stability-table", "Propagation coefficients and variance amplifiers as CSV");
  stab->add_option("--theta", thetas, "theta values")->delimiter(',');
  stab->add_option("--eta1", eta1s, "eta1 values")->delimiter(',');
  stab->add_option("--eta2", eta2s, "eta2 values")->delimiter(',');
  stab->add_option("--z", zs, "lambda*tau values")->delimiter(',');
  stab->add_option("--out", table_out, "Output file (default: stdout)");

  Example1Config ex1;
  double alpha = 0.0;
  std::vector<double> rates;
  std::string ex_out = "out";
  auto* e1 = app.add_subcommand("example1", "Four-species linear chain: exact law, moments and ensembles");
  e1->add_option("--alpha", alpha, "Use rates alpha * (1, 1, 1, 1, 1, 1)");
  e1->add_option("--rates", rates, "Six rate constants")->expected(6)->delimiter(',');
  e1->add_option("--x-total", ex1.x_T, "Total molecule count");
  e1->add_option("--tau", ex1.tau, "Time step");
  e1->add_option("--t-final", ex1.t_final, "Final time");
  e1->add_option("--samples", ex1.samples, "Paths per scheme");
  e1->add_option("--seed", ex1.seed, "Random seed");
  e1->add_option("--workers", ex1.workers, "Worker threads");
  e1->add_option("--grid-points", ex1.grid_points, "Output intervals on [0, t-final]");
  e1->add_flag("--sweep", ex1.sweep, "Also run the error-vs-alpha study (tau = 1, T = 100)");
  e1->add_option("--sweep-samples", ex1.sweep_samples, "Paths per sweep point");
  e1->add_option("--out", ex_out, "Output directory");
  add_estimation(e1, est);

  Example2Config ex2;
  auto* e2 = app.add_subcommand("example2", "Stiff nonlinear three-species network against SSA");
  e2->add_option("--samples", ex2.samples, "Paths per tau scheme");
  e2->add_option("--ssa-samples", ex2.ssa_samples, "SSA reference paths");
  e2->add_option("--tau", ex2.tau, "Time step");
  e2->add_option("--t-final", ex2.t_final, "Final time");
  e2->add_option("--seed", ex2.seed, "Random seed");
  e2->add_option("--workers", ex2.workers, "Worker threads");
  e2->add_option("--grid-points", ex2.grid_points, "Output intervals on [0, t-final]");
  e2->add_option("--out", ex_out, "Output directory");
  add_estimation(e2, est);

  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<ReactionNetwork> holder;
    ReactionNetwork* net = nullptr;
    if (sim->parsed()) {
      const SimulateConfig c = load_run(run, est, net, holder);
      stage = "simulation";
      write(simulate(*net, c).files, run.out);
    } else if (mom->parsed()) {
      const SimulateConfig c = load_run(run, est, net, holder);
      stage = "moment recursion";
      write(moments_pipeline(*net, c), run.out);
    } else if (estc->parsed()) {
      const SimulateConfig c = load_run(run, est, net, holder);
      stage = "parameter estimation";
      write(estimate_pipeline(*net, c), run.out);
    } else if (stab->parsed()) {
      stage = "stability table";
      const std::string text =
          stability_table(config_comment("stability-table", {}), thetas, eta1s, eta2s, zs).str();
      if (table_out.empty()) {
        std::cout << text;
      } else {
        write_bundle({{std::filesystem::path(table_out).filename().string(), text}},
                     std::filesystem::path(table_out).parent_path().empty()
                         ? std::filesystem::path(".")
                         : std::filesystem::path(table_out).parent_path());
      }
    } else if (e1->parsed()) {
      stage = "reading options";
      if (alpha > 0.0) ex1.rates.fill(alpha);
      if (!rates.empty()) std::copy(rates.begin(), rates.end(), ex1.rates.begin());
      ex1.estimation = to_config(est, ex1.estimation);
      stage = "example1";
      write(example1(ex1).files, ex_out);
    } else if (e2->parsed()) {
      stage = "reading options";
      ex2.estimation = to_config(est);
      stage = "example2";
      write(example2(ex2).files, ex_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
