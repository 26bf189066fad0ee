#pragma once

// One-dimensional continuous-state samplers: the gradient-skewed Barker
// proposal with the half-line directional split, the guided walk, and the
// two-kernel example where no Peskun-type ordering holds.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "lifted/kernels.hpp"
#include "lifted/quadrature.hpp"
#include "lifted/rng.hpp"

namespace lifted::barker1d {

struct Target1D {
  std::function<double(double)> log_density;  // unnormalized
  std::function<double(double)> gradient;     // d/dx log density

  static Target1D standard_normal();
};

/// log(1 / (1 + e^-t)) without overflow.
double log_sigmoid(double t);
double sigmoid(double t);

/// Density of the Barker proposal, 2 phi_sigma(y - x) / (1 + exp(-(y - x) g)),
/// g the gradient of the log target at x.
double barker_log_density(double x, double y, double sigma, const Target1D& target);
double barker_density(double x, double y, double sigma, const Target1D& target);

/// z ~ N(0, sigma^2); keep its sign with probability 1 / (1 + e^{-z g}).
double barker_sample(double x, double sigma, const Target1D& target, Rng& rng);

/// Q(x, N_nu(x)) for the half-line split, as a function of s = sigma g only:
///   c_{+1} = int_0^inf 2 phi(u) / (1 + e^{-u s}) du.
/// The direction against the gradient is integrated directly and the other
/// taken as its complement, so both stay accurate when one is small.
double directional_mass_from_slope(double s, Direction nu);
double directional_mass(double x, Direction nu, double sigma, const Target1D& target);

/// Draw from Q_nu(x, .): half-normal displacement accepted with probability
/// 1 / (1 + e^{-nu z g}). Throws std::runtime_error after 10^6 rejections.
double sample_conditional_halfline(double x, Direction nu, double sigma, const Target1D& target,
                                   Rng& rng);

/// Position with its log-target gradient and lazily computed directional masses.
struct BarkerPoint {
  double x = 0.0;
  double grad = 0.0;
  mutable double c_minus = std::numeric_limits<double>::quiet_NaN();
  mutable double c_plus = std::numeric_limits<double>::quiet_NaN();
};

class BarkerProposal1D {
 public:
  using State = BarkerPoint;
  using Move = BarkerPoint;

  BarkerProposal1D(double sigma, Target1D target);

  double sigma() const { return sigma_; }
  State make_state(double x) const { return {x, target_.gradient(x)}; }

  std::optional<Direction> direction_of(const State& x, const Move& y) const;
  double mass(const State& x, Direction nu) const;
  double mass_after(const State&, Move& y, Direction nu) const { return mass(y, nu); }
  Move sample_conditional(const State& x, Direction nu, Rng& rng) const;
  Move sample_unconditional(const State& x, Rng& rng) const;
  double log_ratio(const State& x, const Move& y) const;
  void apply(State& x, const Move& y) const { x = y; }

 private:
  double sigma_;
  Target1D target_;
};

/// Symmetric normal random walk with the half-line split; every direction
/// carries mass 1/2.
class GuidedWalkProposal {
 public:
  using State = double;
  using Move = double;

  GuidedWalkProposal(double sigma, Target1D target);

  double sigma() const { return sigma_; }

  std::optional<Direction> direction_of(double x, double y) const;
  double mass(double, Direction) const { return 0.5; }
  double mass_after(double, double, Direction) const { return 0.5; }
  double sample_conditional(double x, Direction nu, Rng& rng) const;
  double sample_unconditional(double x, Rng& rng) const;
  double log_ratio(double x, double y) const;
  void apply(double& x, double y) const { x = y; }

 private:
  double sigma_;
  Target1D target_;
};

struct CounterexampleProbe {
  double k = 0.0;
  double p_rev = 0.0;
  double p_mh = 0.0;
  double p_rev_error = 0.0;
  double p_mh_error = 0.0;
  double ratio() const { return p_rev / p_mh; }
};

/// P_rev(0, B_k) and P_MH(0, B_k), B_k = {|y| > k}, for a standard normal
/// target with Q_{+1}(x, .) = N(x, sigma^2) and Q_{-1}(x, .) = N(x, 1/sigma^2).
/// Requires sigma in (0, 1) with 1/sigma^2 - sigma^2 - 1 > 0.
CounterexampleProbe counterexample_probe(double sigma, double k, double rel_tol = 1e-10);

}  // namespace lifted::barker1d
