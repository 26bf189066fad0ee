#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lifted {

// Balancing functions phi: (0, inf) -> [0, 1] with phi(r) = r * phi(1/r).
// Every acceptance probability in the library is phi applied to a ratio.

double metropolis_phi(double r);
double barker_phi(double r);

enum class BalancingKind { Metropolis, Barker };

class BalancingFunction {
 public:
  constexpr BalancingFunction(BalancingKind kind = BalancingKind::Metropolis) : kind_(kind) {}

  static constexpr BalancingFunction metropolis() { return BalancingFunction(BalancingKind::Metropolis); }
  static constexpr BalancingFunction barker() { return BalancingFunction(BalancingKind::Barker); }

  BalancingKind kind() const { return kind_; }
  std::string name() const;

  double operator()(double r) const;

  /// phi(exp(log_r)), evaluated without forming exp(log_r) when it would
  /// overflow. The result is clamped to [0, 1].
  double from_log(double log_r) const;

  friend bool operator==(BalancingFunction, BalancingFunction) = default;

 private:
  BalancingKind kind_;
};

struct PropertyCheck {
  std::string name;
  bool passed = true;
  double worst_violation = 0.0;
  /// Grid point (or first factor of a pair) where the worst violation occurred.
  double worst_at = 0.0;
  /// Second factor for the two-argument properties.
  double worst_at_b = 0.0;
};

struct BalancingReport {
  std::vector<PropertyCheck> checks;  // functional equation, monotone, supermultiplicative, scaling, vanishes at 0

  bool all_passed() const;
  const PropertyCheck& check(const std::string& name) const;
};

/// Evaluates the balancing-function properties of `phi` over `grid`.
///
/// Properties, with the names used in the report:
///   "functional_equation"  |phi(r) - r phi(1/r)| <= 1e-12 max(1, phi(r))
///   "non_decreasing"       phi is monotone on the sorted grid
///   "supermultiplicative"  phi(ab) >= phi(a) phi(b)
///   "scaling"              phi(ab) >= b phi(a) for b <= 1
///   "vanishes_at_zero"     phi(r) <= r at the grid minimum
///
/// Throws std::invalid_argument if the grid is empty or has a non-positive or
/// non-finite entry.
BalancingReport check_balancing_properties(const std::function<double(double)>& phi,
                                           std::span<const double> grid);

BalancingReport check_balancing_properties(BalancingFunction phi, std::span<const double> grid);

/// `count` log-spaced points from `lo` to `hi` inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

}  // namespace lifted
