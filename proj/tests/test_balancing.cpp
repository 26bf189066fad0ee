#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifted/balancing.hpp"

using namespace lifted;

TEST_CASE("metropolis_phi values") {
  CHECK(metropolis_phi(1.0) == 1.0);
  CHECK(metropolis_phi(0.5) == 0.5);
  CHECK(metropolis_phi(2.0) == 1.0);
}

TEST_CASE("barker_phi values") {
  CHECK(barker_phi(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(barker_phi(3.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(barker_phi(1.0 / 3.0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("phi rejects non-positive and non-finite ratios") {
  for (double r : {0.0, -1.0, std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(metropolis_phi(r), std::domain_error);
    CHECK_THROWS_AS(barker_phi(r), std::domain_error);
  }
}

TEST_CASE("from_log agrees with direct evaluation and survives extreme ratios") {
  for (auto phi : {BalancingFunction::metropolis(), BalancingFunction::barker()}) {
    for (double lr : {-20.0, -1.0, 0.0, 0.3, 5.0}) CHECK(phi.from_log(lr) == doctest::Approx(phi(std::exp(lr))).epsilon(1e-14));
    CHECK(phi.from_log(1000.0) == 1.0);
    CHECK(phi.from_log(-1000.0) == 0.0);
    CHECK_THROWS_AS(phi.from_log(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  }
}

TEST_CASE("built-in functions pass every property on a wide log grid") {
  const auto grid = log_grid(1e-6, 1e6, 121);
  for (auto phi : {BalancingFunction::metropolis(), BalancingFunction::barker()}) {
    const auto report = check_balancing_properties(phi, grid);
    CHECK_MESSAGE(report.all_passed(), phi.name());
    CHECK(report.checks.size() == 5);
  }
}

TEST_CASE("a squared ratio breaks the functional equation at r = 2") {
  // min(1, r^2): phi(2) = 1 while 2 phi(1/2) = 0.5.
  auto broken = [](double r) { return std::min(1.0, r * r); };
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto report = check_balancing_properties(broken, grid);
  const auto& fe = report.check("functional_equation");
  CHECK_FALSE(fe.passed);
  CHECK(fe.worst_at == 2.0);
  CHECK(fe.worst_violation == doctest::Approx(0.5));

  const auto wide = check_balancing_properties(broken, log_grid(1e-6, 1e6, 121));
  CHECK_FALSE(wide.check("functional_equation").passed);
}

TEST_CASE("property check argument errors") {
  const std::vector<double> empty;
  CHECK_THROWS_AS(check_balancing_properties(BalancingFunction::metropolis(), empty),
                  std::invalid_argument);
  const std::vector<double> bad{1.0, -2.0};
  CHECK_THROWS_AS(check_balancing_properties(BalancingFunction::barker(), bad),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), std::invalid_argument);
}
