#include "splitleap/ssa.hpp"

#include <cmath>

#include "splitleap/errors.hpp"

namespace splitleap {

namespace {

// Flattened reactant/stoichiometry tables for the inner loop.
struct CompiledNetwork {
  struct Term {
    std::size_t species;
    int coeff;
  };
  std::vector<Term> reactants;
  std::vector<std::size_t> reactant_begin;
  std::vector<std::pair<std::size_t, int>> changes;
  std::vector<std::size_t> change_begin;
  std::vector<double> scale;

  explicit CompiledNetwork(const ReactionNetwork& net) {
    const std::size_t m = net.n_reactions();
    scale.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
      reactant_begin.push_back(reactants.size());
      change_begin.push_back(changes.size());
      const Reaction& rx = net.reaction(r);
      double fact = 1.0;
      for (std::size_t i = 0; i < net.n_species(); ++i) {
        if (rx.reactants[i] > 0) {
          reactants.push_back({i, rx.reactants[i]});
          for (int j = 2; j <= rx.reactants[i]; ++j) fact *= j;
        }
        if (net.nu(i, r) != 0) changes.emplace_back(i, net.nu(i, r));
      }
      scale[r] = rx.rate / fact;
    }
    reactant_begin.push_back(reactants.size());
    change_begin.push_back(changes.size());
  }

  double propensity(std::size_t r, const std::int64_t* x) const {
    double a = scale[r];
    for (std::size_t k = reactant_begin[r]; k < reactant_begin[r + 1]; ++k) {
      const Term& t = reactants[k];
      const std::int64_t xi = x[t.species];
      if (xi < t.coeff) return 0.0;
      for (int j = 0; j < t.coeff; ++j) a *= static_cast<double>(xi - j);
    }
    return a;
  }

  // Fills a[] and returns the total.
  double propensities(const std::vector<std::int64_t>& x, std::vector<double>& a) const {
    double total = 0.0;
    for (std::size_t r = 0; r < scale.size(); ++r) {
      a[r] = propensity(r, x.data());
      total += a[r];
    }
    return total;
  }

  std::size_t select(const std::vector<double>& a, double total, double u) const {
    const double target = u * total;
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (a[r] > 0.0) last_positive = r;
      cumulative += a[r];
      if (cumulative > target) return r;
    }
    return last_positive;  // u * total rounded up to the full sum
  }

  void fire(std::size_t r, std::vector<std::int64_t>& x) const {
    for (std::size_t k = change_begin[r]; k < change_begin[r + 1]; ++k) x[changes[k].first] += changes[k].second;
  }
};

}  // namespace

std::optional<SsaEvent> ssa_step(const ReactionNetwork& network, const State& x, RngStream& stream) {
  const Vector a = network.propensity_vector(x);
  const double total = a.sum();
  if (!(total > 0.0)) return std::nullopt;
  SsaEvent ev;
  ev.holding_time = -std::log(stream.uniform()) / total;
  const double target = stream.uniform() * total;
  double cumulative = 0.0;
  ev.channel = static_cast<std::size_t>(a.size() - 1);
  for (Eigen::Index r = 0; r < a.size(); ++r) {
    cumulative += a[r];
    if (cumulative > target) {
      ev.channel = static_cast<std::size_t>(r);
      break;
    }
  }
  while (a[static_cast<Eigen::Index>(ev.channel)] == 0.0 && ev.channel > 0) --ev.channel;
  return ev;
}

std::size_t ssa_grid_path(const ReactionNetwork& network, const State& x0, double t_final,
                          const std::vector<double>& grid, RngStream& stream, std::vector<State>& out) {
  const CompiledNetwork net(network);
  std::vector<std::int64_t> x = x0.counts;
  std::vector<double> a(network.n_reactions());
  out.resize(grid.size());
  std::size_t next = 0;
  std::size_t events = 0;
  double t = 0.0;
  for (;;) {
    const double total = net.propensities(x, a);
    double t_next = std::numeric_limits<double>::infinity();
    if (total > 0.0) t_next = t - std::log(stream.uniform()) / total;
    while (next < grid.size() && grid[next] < t_next && grid[next] <= t_final) out[next++].counts = x;
    if (!(total > 0.0) || t_next > t_final || next == grid.size()) break;
    const std::size_t r = net.select(a, total, stream.uniform());
    net.fire(r, x);
    t = t_next;
    ++events;
  }
  for (; next < grid.size(); ++next) out[next].counts = x;
  return events;
}

PathRecord ssa_path(const ReactionNetwork& network, const State& x0, double t_final,
                    const std::vector<double>& output_grid, RngStream& stream, RecordPolicy policy) {
  if (!(t_final > 0.0)) throw InvalidArgument("ssa_path: t_final must be positive");
  if (!x0.valid()) throw InvalidArgument("ssa_path: initial state has negative counts");
  PathRecord rec;
  if (policy == RecordPolicy::Grid) {
    rec.times = output_grid;
    rec.events = ssa_grid_path(network, x0, t_final, output_grid, stream, rec.states);
    const Vector a = network.propensity_vector(rec.states.empty() ? x0 : rec.states.back());
    rec.absorbed = !(a.sum() > 0.0);
    return rec;
  }

  const CompiledNetwork net(network);
  std::vector<std::int64_t> x = x0.counts;
  std::vector<double> a(network.n_reactions());
  double t = 0.0;
  rec.times.push_back(0.0);
  rec.states.push_back(x0);
  for (;;) {
    const double total = net.propensities(x, a);
    if (!(total > 0.0)) {
      rec.absorbed = true;
      break;
    }
    const double t_next = t - std::log(stream.uniform()) / total;
    if (t_next > t_final) break;
    net.fire(net.select(a, total, stream.uniform()), x);
    t = t_next;
    ++rec.events;
    rec.times.push_back(t);
    rec.states.emplace_back(x);
  }
  return rec;
}

}  // namespace splitleap
