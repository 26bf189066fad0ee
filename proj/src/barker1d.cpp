#include "lifted/barker1d.hpp"

#include <algorithm>
#include <stdexcept>

namespace lifted::barker1d {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kUpper = 12.0;  // integration range in units of sigma
constexpr long kMaxRejections = 1000000;

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("proposal scale sigma must be positive");
}

double log_normal_pdf(double z, double variance) {
  return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * z * z / variance;
}

}  // namespace

Target1D Target1D::standard_normal() {
  return {[](double x) { return -0.5 * x * x; }, [](double x) { return -x; }};
}

double log_sigmoid(double t) {
  return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double barker_log_density(double x, double y, double sigma, const Target1D& target) {
  require_sigma(sigma);
  const double z = y - x;
  return std::log(2.0) + log_normal_pdf(z, sigma * sigma) + log_sigmoid(z * target.gradient(x));
}

double barker_density(double x, double y, double sigma, const Target1D& target) {
  return std::exp(barker_log_density(x, y, sigma, target));
}

double barker_sample(double x, double sigma, const Target1D& target, Rng& rng) {
  require_sigma(sigma);
  const double z = sigma * rng.normal();
  const double keep = sigmoid(z * target.gradient(x));
  return rng.uniform() < keep ? x + z : x - z;
}

double directional_mass_from_slope(double s, Direction nu) {
  if (s == 0.0) return 0.5;
  if (!std::isfinite(s)) throw std::domain_error("directional mass needs a finite slope");
  const double a = std::abs(s);
  // Mass of the direction pointing against the gradient.
  auto integrand = [a](double u) {
    return 2.0 * std::exp(-kLogSqrt2Pi - 0.5 * u * u) * sigmoid(-a * u);
  };
  quad::Options opt;
  opt.abs_tol = 1e-12;
  double small = quad::integrate(integrand, 0.0, kUpper, opt).value;
  // Gaussian tail beyond the range; the sigmoid factor is at most its value there.
  small += std::erfc(kUpper / std::sqrt(2.0)) * sigmoid(-a * kUpper);
  const bool against = (s > 0.0) == (nu == Direction::Minus);
  return against ? small : 1.0 - small;
}

double directional_mass(double x, Direction nu, double sigma, const Target1D& target) {
  require_sigma(sigma);
  return directional_mass_from_slope(sigma * target.gradient(x), nu);
}

double sample_conditional_halfline(double x, Direction nu, double sigma, const Target1D& target,
                                   Rng& rng) {
  require_sigma(sigma);
  const double g = target.gradient(x);
  for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double z = sigma * std::abs(rng.normal());
    if (z == 0.0) continue;
    if (rng.uniform() < sigmoid(sign(nu) * z * g)) return x + sign(nu) * z;
  }
  throw std::runtime_error("conditional Barker sampler exceeded its rejection budget");
}

// ---------------------------------------------------------------------------

BarkerProposal1D::BarkerProposal1D(double sigma, Target1D target)
    : sigma_(sigma), target_(std::move(target)) {
  require_sigma(sigma);
}

std::optional<Direction> BarkerProposal1D::direction_of(const State& x, const Move& y) const {
  if (y.x > x.x) return Direction::Plus;
  if (y.x < x.x) return Direction::Minus;
  return std::nullopt;
}

double BarkerProposal1D::mass(const State& x, Direction nu) const {
  if (std::isnan(x.c_plus)) {
    x.c_plus = directional_mass_from_slope(sigma_ * x.grad, Direction::Plus);
    x.c_minus = directional_mass_from_slope(sigma_ * x.grad, Direction::Minus);
  }
  return nu == Direction::Plus ? x.c_plus : x.c_minus;
}

BarkerProposal1D::Move BarkerProposal1D::sample_conditional(const State& x, Direction nu,
                                                            Rng& rng) const {
  const double y = sample_conditional_halfline(x.x, nu, sigma_, target_, rng);
  return make_state(y);
}

BarkerProposal1D::Move BarkerProposal1D::sample_unconditional(const State& x, Rng& rng) const {
  const double z = sigma_ * rng.normal();
  const double y = rng.uniform() < sigmoid(z * x.grad) ? x.x + z : x.x - z;
  return make_state(y);
}

double BarkerProposal1D::log_ratio(const State& x, const Move& y) const {
  // The normal factors of Q(x, y) and Q(y, x) cancel.
  return target_.log_density(y.x) - target_.log_density(x.x) + log_sigmoid((x.x - y.x) * y.grad) -
         log_sigmoid((y.x - x.x) * x.grad);
}

// ---------------------------------------------------------------------------

GuidedWalkProposal::GuidedWalkProposal(double sigma, Target1D target)
    : sigma_(sigma), target_(std::move(target)) {
  require_sigma(sigma);
}

std::optional<Direction> GuidedWalkProposal::direction_of(double x, double y) const {
  if (y > x) return Direction::Plus;
  if (y < x) return Direction::Minus;
  return std::nullopt;
}

double GuidedWalkProposal::sample_conditional(double x, Direction nu, Rng& rng) const {
  double z;
  do z = std::abs(rng.normal());
  while (z == 0.0);
  return x + sign(nu) * sigma_ * z;
}

double GuidedWalkProposal::sample_unconditional(double x, Rng& rng) const {
  return x + sigma_ * rng.normal();
}

double GuidedWalkProposal::log_ratio(double x, double y) const {
  return target_.log_density(y) - target_.log_density(x);
}

// ---------------------------------------------------------------------------

CounterexampleProbe counterexample_probe(double sigma, double k, double rel_tol) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("counterexample needs sigma in (0, 1)");
  const double s2 = sigma * sigma;
  if (!(1.0 / s2 - s2 - 1.0 > 0.0))
    throw std::invalid_argument("counterexample needs 1/sigma^2 - sigma^2 - 1 > 0");
  if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("k must be non-negative");

  const double v_plus = s2, v_minus = 1.0 / s2;
  // Both integrands are even in y, so P(0, {|y| > k}) is twice the integral over (k, inf).
  auto mh = [=](double y) {
    const double log_target = -0.5 * y * y;
    return 0.5 * std::exp(log_normal_pdf(y, v_minus) + log_target) +
           0.5 * std::exp(log_normal_pdf(y, v_plus) + log_target);
  };
  auto rev = [=](double y) {
    const double log_target = -0.5 * y * y;
    const double lp = log_normal_pdf(y, v_plus), lm = log_normal_pdf(y, v_minus);
    // Q_nu(0, y) (1 ^ pi(y) Q_-nu(y, 0) / (pi(0) Q_nu(0, y))) = min(Q_nu, pi ratio * Q_-nu)
    return 0.5 * std::exp(std::min(lp, log_target + lm)) +
           0.5 * std::exp(std::min(lm, log_target + lp));
  };
  quad::Options opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = rel_tol;
  opt.max_intervals = 20000;
  // Each min() switches branch where its two arguments meet; integrate the
  // smooth pieces separately.
  std::vector<double> cuts{k};
  for (double y2 : {std::log(v_minus / v_plus) / (1.0 / v_plus + 1.0 - 1.0 / v_minus),
                    std::log(v_plus / v_minus) / (1.0 / v_minus + 1.0 - 1.0 / v_plus)}) {
    const double y = std::sqrt(y2);
    if (y2 > 0.0 && y > k) cuts.push_back(y);
  }
  std::sort(cuts.begin(), cuts.end());
  auto piecewise = [&](auto& f) {
    quad::Result total;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const auto part = i + 1 < cuts.size() ? quad::integrate(f, cuts[i], cuts[i + 1], opt)
                                             : quad::integrate_to_infinity(f, cuts[i], opt);
      total.value += part.value;
      total.error += part.error;
    }
    return total;
  };
  const auto r = piecewise(rev);
  const auto m = piecewise(mh);
  return {k, 2.0 * r.value, 2.0 * m.value, 2.0 * r.error, 2.0 * m.error};
}

}  // namespace lifted::barker1d
