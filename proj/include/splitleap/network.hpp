#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splitleap/linalg.hpp"

namespace splitleap {

/// One reaction channel with mass-action kinetics. Stoichiometries are dense
/// (one entry per species).
struct Reaction {
  std::vector<int> reactants;  // nu^-
  std::vector<int> products;   // nu^+
  double rate = 0.0;

  int order() const;
};

/// Integer molecule counts, one entry per species.
struct State {
  std::vector<std::int64_t> counts;

  State() = default;
  explicit State(std::vector<std::int64_t> c) : counts(std::move(c)) {}
  State(std::initializer_list<std::int64_t> c) : counts(c) {}

  std::size_t size() const { return counts.size(); }
  std::int64_t operator[](std::size_t i) const { return counts[i]; }
  std::int64_t& operator[](std::size_t i) { return counts[i]; }
  bool valid() const;
  Vector as_vector() const;
  bool operator==(const State&) const = default;
};

/// a(x) ~= C x + d.
struct LinearizedPropensity {
  Matrix C;  // R x N
  Vector d;  // R
};

struct ReversiblePair {
  std::size_t forward = 0;
  std::size_t backward = 0;
  bool operator==(const ReversiblePair&) const = default;
};

struct PairDetection {
  std::vector<ReversiblePair> pairs;
  std::vector<std::size_t> unpaired;
};

/// Immutable chemical reaction network. All member functions are pure and
/// safe to call concurrently.
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions);

  std::size_t n_species() const { return species_.size(); }
  std::size_t n_reactions() const { return reactions_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(std::size_t r) const { return reactions_[r]; }
  /// Non-fatal diagnostics collected at construction (e.g. high reaction order).
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Integer stoichiometric change of channel r for species i.
  int nu(std::size_t i, std::size_t r) const { return nu_int_[r * species_.size() + i]; }
  /// N x R stoichiometric matrix as reals.
  const Matrix& stoichiometry() const { return nu_; }
  bool is_first_order() const { return max_order_ <= 1; }
  int max_order() const { return max_order_; }

  /// c_r * prod_i binom(x_i, nu^-_ir); zero when a count is below its stoichiometry.
  double propensity(std::size_t r, const State& x) const;
  Vector propensity_vector(const State& x) const;
  /// Falling-factorial polynomial extension to real-valued states.
  Vector propensity_vector(const Vector& x) const;
  /// Exact derivative (R x N) of the polynomial extension.
  Matrix jacobian(const Vector& x) const;
  /// C = D a(mu), d = a(mu) - C mu.
  LinearizedPropensity linearize_at(const Vector& mu) const;

  // Real-valued stage evaluation used by the implicit tau-leap stages. Zero- and
  // first-order channels use their exact linear form; higher-order channels are
  // evaluated at max(x, 0) and floored at zero.
  void stage_propensities(const Vector& x, Vector& out) const;
  void stage_jacobian(const Vector& x, Matrix& out) const;

  /// Network with reactants and products of every channel swapped.
  ReactionNetwork reversed() const;

 private:
  struct Term {
    std::size_t species;
    int coeff;
  };
  double channel_poly(std::size_t r, const Vector& x) const;

  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  std::vector<std::vector<Term>> reactant_terms_;
  std::vector<double> inv_factorials_;  // 1 / prod_i nu^-_ir!
  std::vector<int> nu_int_;
  Matrix nu_;
  int max_order_ = 0;
  std::vector<std::string> warnings_;
};

PairDetection detect_reversible_pairs(const ReactionNetwork& network);

/// -trace(nu_pair * Da_pair(x_star)) for the two-channel sub-network of a pair.
/// Throws UnstablePair when the result is not positive.
double relaxation_rate(const ReactionNetwork& network, const ReversiblePair& pair,
                       const Vector& x_star);

/// Decay rate -nu_r . grad a_r(x) of a single channel (may be <= 0).
double channel_relaxation_rate(const ReactionNetwork& network, std::size_t r,
                               const Vector& x);

}  // namespace splitleap
