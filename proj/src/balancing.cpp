#include "lifted/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lifted {

namespace {

constexpr double kRelTol = 1e-12;

void require_ratio(double r) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw std::domain_error("balancing function argument must be positive and finite");
}

double tolerance(double scale) { return kRelTol * std::max(1.0, std::abs(scale)); }

}  // namespace

double metropolis_phi(double r) {
  require_ratio(r);
  return std::min(1.0, r);
}

double barker_phi(double r) {
  require_ratio(r);
  return r / (1.0 + r);
}

std::string BalancingFunction::name() const {
  return kind_ == BalancingKind::Metropolis ? "metropolis" : "barker";
}

double BalancingFunction::operator()(double r) const {
  return kind_ == BalancingKind::Metropolis ? metropolis_phi(r) : barker_phi(r);
}

double BalancingFunction::from_log(double log_r) const {
  if (std::isnan(log_r)) throw std::domain_error("log acceptance ratio is NaN");
  double a;
  if (kind_ == BalancingKind::Metropolis) {
    a = log_r >= 0.0 ? 1.0 : std::exp(log_r);
  } else {
    // r / (1 + r) = 1 / (1 + exp(-log_r))
    a = log_r >= 0.0 ? 1.0 / (1.0 + std::exp(-log_r)) : std::exp(log_r) / (1.0 + std::exp(log_r));
  }
  return std::clamp(a, 0.0, 1.0);
}

bool BalancingReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
}

const PropertyCheck& BalancingReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no balancing property named " + name);
}

BalancingReport check_balancing_properties(const std::function<double(double)>& phi,
                                           std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("balancing property grid is empty");
  for (double r : grid)
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("balancing property grid entries must be positive and finite");

  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());

  auto record = [](PropertyCheck& c, double violation, double tol, double a, double b = 0.0) {
    if (violation > tol) c.passed = false;
    if (violation > c.worst_violation) {
      c.worst_violation = violation;
      c.worst_at = a;
      c.worst_at_b = b;
    }
  };

  PropertyCheck functional{"functional_equation"};
  for (double r : sorted) {
    const double lhs = phi(r);
    const double rhs = r * phi(1.0 / r);
    record(functional, std::abs(lhs - rhs), tolerance(lhs), r);
  }

  PropertyCheck monotone{"non_decreasing"};
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double prev = phi(sorted[i - 1]);
    const double cur = phi(sorted[i]);
    record(monotone, prev - cur, tolerance(prev), sorted[i]);
  }

  PropertyCheck supermult{"supermultiplicative"};
  PropertyCheck scaling{"scaling"};
  for (double a : sorted) {
    const double pa = phi(a);
    for (double b : sorted) {
      const double pab = phi(a * b);
      record(supermult, pa * phi(b) - pab, tolerance(pab), a, b);
      if (b <= 1.0) record(scaling, b * pa - pab, tolerance(pab), a, b);
    }
  }

  PropertyCheck vanishing{"vanishes_at_zero"};
  const double rmin = sorted.front();
  const double pmin = phi(rmin);
  record(vanishing, pmin - rmin, kRelTol * rmin, rmin);
  if (pmin < 0.0) record(vanishing, -pmin, 0.0, rmin);

  return BalancingReport{{functional, monotone, supermult, scaling, vanishing}};
}

BalancingReport check_balancing_properties(BalancingFunction phi, std::span<const double> grid) {
  return check_balancing_properties([phi](double r) { return phi(r); }, grid);
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0)
    throw std::invalid_argument("log_grid needs 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace lifted
