#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lifted/exact.hpp"
#include "lifted/ising.hpp"
#include "support.hpp"

using namespace lifted;
using namespace lifted::exact;

namespace {

FiniteInstance two_state(double p0) {
  FiniteInstance inst;
  inst.n = 2;
  inst.pi = Vector(2);
  inst.pi << p0, 1.0 - p0;
  inst.q = Matrix(2, 2);
  inst.q << 0, 1, 1, 0;
  inst.dir.resize(2, 2);
  inst.dir << 0, 1, -1, 0;
  return inst;
}

// Path 0 - 1 - 2 oriented upwards, with unequal weights out of the middle state.
FiniteInstance imbalanced_path() {
  FiniteInstance inst;
  inst.n = 3;
  inst.pi = Vector(3);
  inst.pi << 0.2, 0.5, 0.3;
  inst.q = Matrix::Zero(3, 3);
  inst.q(0, 1) = 1.0;
  inst.q(1, 0) = 1.0;
  inst.q(1, 2) = 3.0;
  inst.q(2, 1) = 2.0;
  inst.dir.setZero(3, 3);
  inst.dir(0, 1) = 1;
  inst.dir(1, 0) = -1;
  inst.dir(1, 2) = 1;
  inst.dir(2, 1) = -1;
  return inst;
}

DenseKernel kernel_of(const Matrix& m) { return {m, false}; }

double off_diagonal_min(const Matrix& m, double scale) {
  double best = INFINITY;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) best = std::min(best, scale * m(i, j));
  return best;
}

}  // namespace

TEST_CASE("MH kernel on two states") {
  auto k = build_mh_kernel(two_state(0.5), BalancingFunction::metropolis());
  CHECK(k.m(0, 1) == 1.0);
  CHECK(k.m(1, 0) == 1.0);
  CHECK(k.m(0, 0) == 0.0);

  k = build_mh_kernel(two_state(2.0 / 3.0), BalancingFunction::metropolis());
  CHECK(k.m(0, 0) == doctest::Approx(0.5));
  CHECK(k.m(0, 1) == doctest::Approx(0.5));
  CHECK(k.m(1, 0) == doctest::Approx(1.0));
  CHECK(k.m(1, 1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("kernels on a random 6-state instance are stochastic and pi-invariant") {
  Rng rng(testing::kSeed);
  GeneratorOptions opt;
  opt.min_states = opt.max_states = 6;
  const auto inst = random_instance(rng, opt);
  const auto k = build_kernels(inst, BalancingFunction::metropolis());
  for (const auto* p : {&k.mh, &k.rev, &k.lifted}) {
    CHECK(row_sum_residual(*p) <= 1e-12);
    CHECK(p->m.minCoeff() >= 0.0);
    CHECK(stationarity_residual(*p, inst.pi) <= 1e-12);
  }
  CHECK(detailed_balance_residual(k.mh, inst.pi) <= 1e-12);
  CHECK(detailed_balance_residual(k.rev, inst.pi) <= 1e-12);
  CHECK(skewed_db_residual(k.lifted, inst.pi) <= 1e-12);
}

TEST_CASE("reversible kernel when both states are on the boundary") {
  const auto inst = two_state(2.0 / 3.0);
  const auto rev = build_rev_kernel(inst, BalancingFunction::metropolis());
  const auto mh = build_mh_kernel(inst, BalancingFunction::metropolis());
  const Matrix expected = 0.5 * Matrix::Identity(2, 2) + 0.5 * mh.m;
  CHECK((rev.m - expected).cwiseAbs().maxCoeff() <= 1e-15);
  // pi P by hand.
  const double p0 = inst.pi(0) * rev.m(0, 0) + inst.pi(1) * rev.m(1, 0);
  const double p1 = inst.pi(0) * rev.m(0, 1) + inst.pi(1) * rev.m(1, 1);
  CHECK(p0 == doctest::Approx(inst.pi(0)).epsilon(1e-15));
  CHECK(p1 == doctest::Approx(inst.pi(1)).epsilon(1e-15));
}

TEST_CASE("lifted kernel on a uniform two-state instance is a 4-cycle") {
  const auto k = build_lifted_kernel(two_state(0.5), BalancingFunction::metropolis());
  REQUIRE(k.lifted);
  REQUIRE(k.size() == 4);
  auto at = [](std::size_t x, Direction nu) { return DenseKernel::lifted_index(2, x, nu); };
  CHECK(k.m(at(0, Direction::Plus), at(1, Direction::Plus)) == 1.0);
  CHECK(k.m(at(1, Direction::Plus), at(1, Direction::Minus)) == 1.0);
  CHECK(k.m(at(1, Direction::Minus), at(0, Direction::Minus)) == 1.0);
  CHECK(k.m(at(0, Direction::Minus), at(0, Direction::Plus)) == 1.0);
  CHECK(k.m.sum() == 4.0);
}

TEST_CASE("lifted kernel under perfect balance averages to the reversible kernel") {
  Rng rng(testing::kSeed + 1);
  const auto inst = random_balanced_instance(rng, 8);
  REQUIRE(inst.perfectly_balanced());
  const auto k = build_kernels(inst, BalancingFunction::metropolis());
  for (std::size_t x = 0; x < 8; ++x)
    for (std::size_t y = 0; y < 8; ++y) {
      if (x == y) continue;
      const double avg = 0.5 * (k.lifted.m(DenseKernel::lifted_index(8, x, Direction::Plus),
                                           DenseKernel::lifted_index(8, y, Direction::Plus)) +
                                k.lifted.m(DenseKernel::lifted_index(8, x, Direction::Minus),
                                           DenseKernel::lifted_index(8, y, Direction::Minus)));
      CHECK(avg == doctest::Approx(k.rev.m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)))
                       .epsilon(1e-13));
    }
}

TEST_CASE("stationarity residual") {
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  CHECK(stationarity_residual(kernel_of(Matrix::Identity(3, 3)), pi) == 0.0);

  Rng rng(testing::kSeed + 2);
  GeneratorOptions opt;
  opt.min_states = opt.max_states = 6;
  auto inst = random_instance(rng, opt);
  inst.pi = Vector::Constant(6, 1.0 / 6.0);
  auto k = build_mh_kernel(inst, BalancingFunction::metropolis());
  k.m(0, 1) += 1e-3;
  k.m.row(0) /= k.m.row(0).sum();
  CHECK(stationarity_residual(k, inst.pi) >= 1e-4);

  CHECK_THROWS_AS(stationarity_residual(k, Vector::Constant(5, 0.2)), std::invalid_argument);
}

TEST_CASE("skewed detailed balance") {
  SUBCASE("ignoring directional masses breaks it on an imbalanced instance") {
    const auto inst = imbalanced_path();
    REQUIRE_FALSE(inst.perfectly_balanced());
    const auto good = build_lifted_kernel(inst, BalancingFunction::metropolis());
    const auto bad =
        build_lifted_kernel(inst, BalancingFunction::metropolis(), LiftedRatio::IgnoreDirectionalMass);
    CHECK(skewed_db_residual(good, inst.pi) <= 1e-15);
    CHECK(skewed_db_residual(bad, inst.pi) > 1e-3);
  }
  SUBCASE("full symmetry gives exactly zero") {
    FiniteInstance inst;
    inst.n = 4;
    inst.pi = Vector::Constant(4, 0.25);
    inst.q = Matrix::Zero(4, 4);
    inst.dir.setZero(4, 4);
    for (int x = 0; x < 4; ++x) {
      const int up = (x + 1) % 4;
      inst.q(x, up) = inst.q(up, x) = 1.0;
      inst.dir(x, up) = 1;
      inst.dir(up, x) = -1;
    }
    const auto k = build_lifted_kernel(inst, BalancingFunction::metropolis());
    CHECK(skewed_db_residual(k, inst.pi) == 0.0);
  }
  SUBCASE("rejects a non-lifted kernel") {
    const auto inst = two_state(0.5);
    CHECK_THROWS(skewed_db_residual(build_mh_kernel(inst, BalancingFunction::metropolis()), inst.pi));
  }
}

TEST_CASE("Peskun margin under perfect balance is half the smallest MH entry") {
  Rng rng(testing::kSeed + 3);
  const auto inst = random_balanced_instance(rng, 7);
  const auto mh = build_mh_kernel(inst, BalancingFunction::metropolis());
  const auto rev = build_rev_kernel(inst, BalancingFunction::metropolis());
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 7; ++j)
      if (i != j) CHECK(rev.m(i, j) >= mh.m(i, j) - 1e-15);
  const auto margin = peskun_bound_margin(rev, mh);
  CHECK(margin.margin == doctest::Approx(off_diagonal_min(mh.m, 0.5)).epsilon(1e-14));
  CHECK(margin.relative_margin == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("near-tight Peskun margins exist among imbalanced 3-state instances") {
  Rng rng(testing::kSeed + 4);
  GeneratorOptions opt;
  opt.min_states = opt.max_states = 3;
  opt.log_weight_range = 6.0;
  double best = INFINITY;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto inst = random_instance(rng, opt);
    const auto m = peskun_bound_margin(build_rev_kernel(inst, BalancingFunction::metropolis()),
                                       build_mh_kernel(inst, BalancingFunction::metropolis()));
    CHECK(m.relative_margin >= -1e-12);
    best = std::min(best, m.relative_margin);
  }
  CHECK(best < 0.01);
}

TEST_CASE("asymptotic variance of a two-state chain") {
  Matrix m(2, 2);
  m << 0.7, 0.3, 0.6, 0.4;
  Vector pi(2);
  pi << 2.0 / 3.0, 1.0 / 3.0;
  Vector f(2);
  f << 0.0, 1.0;
  const double lambda2 = 0.1;
  const double closed = pi(0) * pi(1) * (1 + lambda2) / (1 - lambda2);

  // Var f + 2 sum_k Cov(f(X_0), f(X_k)) with explicit matrix powers.
  const double mean = pi.dot(f);
  const Vector fc = f.array() - mean;
  double series = pi.dot(fc.cwiseProduct(fc));
  Matrix power = Matrix::Identity(2, 2);
  for (int k = 1; k < 200; ++k) {
    power = power * m;
    series += 2.0 * pi.dot(fc.cwiseProduct(power * fc));
  }
  const double v = asymptotic_variance_exact(kernel_of(m), pi, f);
  CHECK(closed == doctest::Approx(0.271604938).epsilon(1e-8));
  CHECK(v == doctest::Approx(closed).epsilon(1e-12));
  CHECK(v == doctest::Approx(series).epsilon(1e-12));
}

TEST_CASE("periodic flip chain has zero asymptotic variance") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  Vector pi = Vector::Constant(2, 0.5);
  Vector f(2);
  f << 3.0, -1.0;
  CHECK(asymptotic_variance_exact(kernel_of(m), pi, f) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(lambda_variance_exact(kernel_of(m), pi, f, 0.9999)) <= 1e-3);
}

TEST_CASE("iid kernel gives Var f at every lambda") {
  Rng rng(testing::kSeed + 5);
  Vector pi(5);
  for (int i = 0; i < 5; ++i) pi(i) = 0.1 + rng.uniform();
  pi /= pi.sum();
  Vector f(5);
  for (int i = 0; i < 5; ++i) f(i) = rng.normal();
  const Matrix m = Vector::Ones(5) * pi.transpose();
  const double var = variance_under(pi, f);
  CHECK(asymptotic_variance_exact(kernel_of(m), pi, f) == doctest::Approx(var).epsilon(1e-12));
  for (double lambda : {0.0, 0.5, 0.9999})
    CHECK(lambda_variance_exact(kernel_of(m), pi, f, lambda) == doctest::Approx(var).epsilon(1e-10));
}

TEST_CASE("lambda variance") {
  Rng rng(testing::kSeed + 6);
  GeneratorOptions opt;
  opt.min_states = opt.max_states = 6;
  const auto inst = random_instance(rng, opt);
  const auto k = build_kernels(inst, BalancingFunction::metropolis());
  const auto fs = test_functionals(inst.pi, rng, 3);
  for (const auto* p : {&k.mh, &k.rev, &k.lifted})
    for (const auto& f : fs) {
      CHECK(lambda_variance_exact(*p, inst.pi, f, 0.0) ==
            doctest::Approx(variance_under(inst.pi, f)).epsilon(1e-12));
      const double var = asymptotic_variance_exact(*p, inst.pi, f);
      CHECK(lambda_variance_exact(*p, inst.pi, f, 0.9999) == doctest::Approx(var).epsilon(0.01));
    }
  CHECK_THROWS_AS(lambda_variance_exact(k.mh, inst.pi, fs[0], 1.0), std::domain_error);
  CHECK_THROWS_AS(lambda_variance_exact(k.mh, inst.pi, fs[0], -0.1), std::domain_error);
}

TEST_CASE("non-ergodic kernel is reported") {
  Vector pi = Vector::Constant(2, 0.5);
  Vector f(2);
  f << 1.0, 0.0;
  CHECK_THROWS_AS(asymptotic_variance_exact(kernel_of(Matrix::Identity(2, 2)), pi, f), NonErgodicError);
}

TEST_CASE("perfect balance orders all three variances") {
  Rng rng(testing::kSeed + 7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_balanced_instance(rng, 5 + static_cast<std::size_t>(trial));
    const auto k = build_kernels(inst, BalancingFunction::metropolis());
    for (const auto& r : theorem1_certificates(k, inst.pi, test_functionals(inst.pi, rng))) {
      CHECK(r.holds());
      CHECK(r.var_lifted <= r.var_rev + kTheorem1Slack);
      CHECK(r.var_rev <= r.var_mh + kTheorem1Slack);
    }
  }
}

TEST_CASE("2x2 Ising with a strong field nearly reaches the variance bound") {
  Rng rng(testing::kSeed + 8);
  ising::IsingParams params{2, 0.5, ising::generate_external_field(2, 3.0, rng)};
  const auto inst = ising::finite_instance(params);
  REQUIRE(inst.n == 16);
  const Vector f = standardize_under(inst.pi, ising::magnetisation_vector(4));
  const auto r = theorem1_certificate(inst, f);
  CHECK(r.holds());
  const double bound = 2.0 * r.var_mh + r.var_f;
  MESSAGE("var_rev " << r.var_rev << " bound " << bound);
  CHECK(r.var_rev >= 0.9 * bound);
}

TEST_CASE("instance validation") {
  auto inst = two_state(0.5);
  inst.dir(1, 0) = 1;
  CHECK_THROWS_AS(inst.validate(), InstanceError);

  inst = two_state(0.5);
  inst.q(1, 0) = 0.0;
  CHECK_THROWS_AS(inst.validate(), InstanceError);

  inst = two_state(0.5);
  inst.pi(0) = 0.7;
  CHECK_THROWS_AS(inst.validate(), InstanceError);

  inst = two_state(0.5);
  inst.q(0, 0) = 1.0;
  CHECK_THROWS_AS(build_mh_kernel(inst, BalancingFunction::metropolis()), InstanceError);
}

TEST_CASE("instance JSON round trip") {
  Rng rng(testing::kSeed + 9);
  const auto inst = random_instance(rng);
  const auto back = FiniteInstance::from_json(inst.to_json());
  CHECK(back.n == inst.n);
  CHECK(back.pi == inst.pi);
  CHECK(back.q == inst.q);
  CHECK(back.dir == inst.dir);
}

TEST_CASE("discretized guided walk is perfectly balanced") {
  const auto inst = discretized_guided_walk(64, 2.5);
  CHECK(inst.n == 64);
  CHECK(inst.perfectly_balanced());
  CHECK(inst.pi.sum() == doctest::Approx(1.0));
}
