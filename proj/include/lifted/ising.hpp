#pragma once

// Two-dimensional Ising target with single-flip moves and discrete Barker
// proposal weights. Moves that raise the set of +1 spins point in direction
// +1, moves that shrink it point in direction -1.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lifted/exact.hpp"
#include "lifted/kernels.hpp"
#include "lifted/rng.hpp"

namespace lifted::ising {

struct IsingParams {
  int eta = 1;
  double coupling = 0.5;
  std::vector<double> field;  // length eta * eta, row-major

  std::size_t sites() const { return static_cast<std::size_t>(eta) * static_cast<std::size_t>(eta); }
  void validate() const;
};

/// Site k has column (k mod eta) + 1; columns up to floor(eta / 2) get
/// -mu + eps, the rest +mu + eps, eps ~ Uniform(-0.1, 0.1).
std::vector<double> generate_external_field(int eta, double mu, Rng& rng);

/// Immutable model data shared by every lattice of one target.
class IsingModel {
 public:
  explicit IsingModel(IsingParams params);

  const IsingParams& params() const { return params_; }
  std::size_t sites() const { return params_.sites(); }
  const std::vector<int>& neighbours(std::size_t i) const { return neighbours_[i]; }

 private:
  IsingParams params_;
  std::vector<std::vector<int>> neighbours_;  // North, South, West, East where present
};

/// Sigmoid 1 / (1 + e^-delta), kept at or above the smallest normal double so
/// that ratios of weights stay finite.
double barker_weight_from_delta(double delta);

/// Fenwick tree over non-negative weights with prefix-sum search.
class WeightTree {
 public:
  void reset(const std::vector<double>& weights);
  void add(std::size_t i, double delta);
  /// Smallest i with prefix(i) > target; target in [0, total).
  std::size_t find(double target) const;
  double total() const;

 private:
  std::vector<double> tree_;
  std::size_t top_bit_ = 0;
};

/// Spin configuration with cached Barker flip weights and directional sums.
///
/// c_plus sums the weights of sites at -1 (flipping them moves up), c_minus
/// those of sites at +1.
class SpinLattice {
 public:
  SpinLattice(std::shared_ptr<const IsingModel> model, std::vector<std::int8_t> spins);
  static SpinLattice all_up(std::shared_ptr<const IsingModel> model);
  static SpinLattice random(std::shared_ptr<const IsingModel> model, Rng& rng);

  const IsingModel& model() const { return *model_; }
  const std::shared_ptr<const IsingModel>& model_ptr() const { return model_; }
  std::size_t sites() const { return spins_.size(); }
  const std::vector<std::int8_t>& spins() const { return spins_; }
  int spin(std::size_t i) const { return spins_[i]; }

  /// log pi(flip_i(x)) - log pi(x).
  double log_ratio_flip(std::size_t i) const;
  double barker_weight(std::size_t i) const;
  double cached_weight(std::size_t i) const { return weights_[i]; }

  /// Sum of flip weights in direction nu; exactly 0 when no site can move that way.
  double c_dir(Direction nu) const;
  double c() const { return c_minus_ + c_plus_; }
  std::size_t eligible(Direction nu) const {
    return nu == Direction::Plus ? sites() - up_count_ : up_count_;
  }

  /// Flips site i and refreshes the weights of i and its lattice neighbours.
  void apply_flip(std::size_t i);

  /// Site drawn with probability w_i / c_nu among sites with spin -nu, or
  /// nullopt when there are none.
  std::optional<std::size_t> sample_flip_direction(Direction nu, Rng& rng) const;
  /// Site drawn with probability w_i / c.
  std::size_t sample_flip(Rng& rng) const;

  /// (c_-1, c_+1) of flip_i(x), computed without modifying the lattice.
  std::pair<double, double> masses_after_flip(std::size_t i) const;

  long magnetisation() const;

  /// Recomputes every cached quantity from the spins.
  void recompute();
  /// Largest deviation between the caches and a from-scratch recomputation.
  double cache_error() const;

 private:
  double weight_of(std::size_t i, const std::vector<std::int8_t>& spins) const;
  void set_weight(std::size_t i, double w);

  std::shared_ptr<const IsingModel> model_;
  std::vector<std::int8_t> spins_;
  std::vector<double> weights_;
  WeightTree up_tree_;    // weights of sites at +1 (direction -1 moves)
  WeightTree down_tree_;  // weights of sites at -1 (direction +1 moves)
  double c_minus_ = 0.0, c_plus_ = 0.0;
  std::size_t up_count_ = 0;
  std::size_t updates_since_recompute_ = 0;
};

long magnetisation(const SpinLattice& x);

/// Site-flip move with the target's directional sums memoized on first use.
struct FlipMove {
  std::size_t site = 0;
  mutable std::optional<std::pair<double, double>> after;  // (c_-1, c_+1) of the target
};

/// Single-flip Barker proposal satisfying DirectionalProposal.
class IsingProposal {
 public:
  using State = SpinLattice;
  using Move = FlipMove;

  std::optional<Direction> direction_of(const State& x, const Move& m) const;
  double mass(const State& x, Direction nu) const;
  double mass_after(const State& x, Move& m, Direction nu) const;
  Move sample_conditional(const State& x, Direction nu, Rng& rng) const;
  Move sample_unconditional(const State& x, Rng& rng) const;
  double log_ratio(const State& x, Move& m) const;
  void apply(State& x, const Move& m) const { x.apply_flip(m.site); }
};

inline constexpr int kMaxEnumerationEta = 3;

/// Bit i of a state index is set when spin i is +1.
std::vector<std::int8_t> spins_from_index(std::uint32_t index, std::size_t sites);

/// Normalized mass function over all 2^n configurations; eta <= 3 only.
exact::Vector enumerate_target(const IsingParams& params);

/// Finite instance with Barker single-flip weights over the enumerated space.
exact::FiniteInstance finite_instance(const IsingParams& params);

/// Magnetisation of every enumerated configuration.
exact::Vector magnetisation_vector(std::size_t sites);

}  // namespace lifted::ising
