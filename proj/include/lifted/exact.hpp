#pragma once

// Exact finite-state construction of the MH, reversible-directional and lifted
// kernels, with stationarity, detailed-balance and variance certificates.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifted/balancing.hpp"
#include "lifted/kernels.hpp"
#include "lifted/rng.hpp"

#include <json.hpp>

namespace lifted::exact {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class InstanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonErgodicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Target, unnormalized proposal weights and edge directions on {0, ..., n-1}.
///
/// q(x, y) > 0 iff y is in N(x); dir(x, y) is +1 or -1 on edges and 0 off them.
struct FiniteInstance {
  std::size_t n = 0;
  Vector pi;
  Matrix q;
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> dir;

  /// Throws InstanceError naming the first offending state or pair.
  void validate() const;

  double c(std::size_t x) const { return q.row(static_cast<Eigen::Index>(x)).sum(); }
  double c_dir(std::size_t x, Direction nu) const;
  /// Q(x, N_nu(x)).
  double mass(std::size_t x, Direction nu) const { return c_dir(x, nu) / c(x); }
  bool on_boundary(std::size_t x) const {
    return c_dir(x, Direction::Minus) <= 0.0 || c_dir(x, Direction::Plus) <= 0.0;
  }
  bool perfectly_balanced(double tol = 1e-12) const;

  nlohmann::json to_json() const;
  static FiniteInstance from_json(const nlohmann::json& j);
};

/// Row-stochastic matrix. Lifted kernels index (x, -1) as x and (x, +1) as n + x.
struct DenseKernel {
  Matrix m;
  bool lifted = false;

  Eigen::Index size() const { return m.rows(); }
  std::size_t base_states() const {
    return static_cast<std::size_t>(lifted ? m.rows() / 2 : m.rows());
  }
  static Eigen::Index lifted_index(std::size_t n, std::size_t x, Direction nu) {
    return static_cast<Eigen::Index>(nu == Direction::Minus ? x : n + x);
  }
};

/// How the lifted kernel's acceptance ratio accounts for directional masses.
/// `IgnoreDirectionalMass` uses the plain MH ratio, i.e. pretends c_nu(x) =
/// c(x) / 2; it exists to exhibit the failure it causes.
enum class LiftedRatio { Directional, IgnoreDirectionalMass };

DenseKernel build_mh_kernel(const FiniteInstance& inst, BalancingFunction phi);
DenseKernel build_rev_kernel(const FiniteInstance& inst, BalancingFunction phi);
DenseKernel build_lifted_kernel(const FiniteInstance& inst, BalancingFunction phi,
                                LiftedRatio ratio = LiftedRatio::Directional);

/// pi on the kernel's index space: pi itself, or pi (x) Uniform{-1,+1}.
Vector extend_distribution(const DenseKernel& p, const Vector& pi);
/// f(x, nu) = f(x) on a lifted kernel.
Vector extend_function(const DenseKernel& p, const Vector& f);

/// max_j |(pi P)_j - pi_j|, with pi extended over directions for lifted kernels.
double stationarity_residual(const DenseKernel& p, const Vector& pi);
/// max_{x != y} |pi(x) P(x,y) - pi(y) P(y,x)|.
double detailed_balance_residual(const DenseKernel& p, const Vector& pi);
/// max_{x != y} |pi(x) T_{+1}(x,y) - pi(y) T_{-1}(y,x)| from a lifted kernel.
double skewed_db_residual(const DenseKernel& lifted, const Vector& pi);
/// max over rows of |sum_j P(i,j) - 1|.
double row_sum_residual(const DenseKernel& p);

struct PeskunMargin {
  /// min_{x != y} P_rev(x,y) - P_MH(x,y) / 2.
  double margin = 0.0;
  /// min over edges with P_MH(x,y) > 0 of (P_rev(x,y) - P_MH(x,y)/2) / P_MH(x,y).
  double relative_margin = 0.0;
};
PeskunMargin peskun_bound_margin(const DenseKernel& rev, const DenseKernel& mh);

/// Factorized Poisson solver for one kernel: var(f, P) for many f.
class VarianceSolver {
 public:
  VarianceSolver(const DenseKernel& p, const Vector& pi);
  /// Asymptotic variance of the ergodic average of f (f given on base states).
  double asymptotic_variance(const Vector& f) const;

 private:
  const DenseKernel* kernel_;
  Vector pi_;  // extended
  Eigen::PartialPivLU<Matrix> lu_;
};

double asymptotic_variance_exact(const DenseKernel& p, const Vector& pi, const Vector& f);
double lambda_variance_exact(const DenseKernel& p, const Vector& pi, const Vector& f,
                             double lambda);
/// var_lambda for several functionals sharing one factorization of I - lambda P.
std::vector<double> lambda_variances(const DenseKernel& p, const Vector& pi,
                                     const std::vector<Vector>& fs, double lambda);

/// Var_pi[f].
double variance_under(const Vector& pi, const Vector& f);
/// (f - pi f) / sd_pi(f).
Vector standardize_under(const Vector& pi, const Vector& f);

struct Theorem1Report {
  double var_lifted = 0.0;
  double var_rev = 0.0;
  double var_mh = 0.0;
  double var_f = 0.0;
  bool lifted_le_rev = false;
  bool rev_le_bound = false;
  bool holds() const { return lifted_le_rev && rev_le_bound; }
};

inline constexpr double kTheorem1Slack = 1e-8;

struct KernelTriple {
  DenseKernel mh, rev, lifted;
};
KernelTriple build_kernels(const FiniteInstance& inst, BalancingFunction phi);

Theorem1Report theorem1_certificate(const FiniteInstance& inst, const Vector& f,
                                    BalancingFunction phi = BalancingFunction::metropolis());

/// Certificates for a batch of functionals, reusing the three factorizations.
std::vector<Theorem1Report> theorem1_certificates(const KernelTriple& k, const Vector& pi,
                                                  const std::vector<Vector>& fs);

struct GeneratorOptions {
  std::size_t min_states = 4;
  std::size_t max_states = 12;
  /// Probability of each extra edge beyond a random spanning tree.
  double edge_probability = 0.4;
  /// Log-uniform weight range [e^-w, e^w].
  double log_weight_range = 3.0;
};

/// Random instance: Dirichlet(1) target, connected symmetric support, random
/// orientation satisfying the direction-flip condition, log-uniform weights.
/// At least one state is forced onto the boundary.
FiniteInstance random_instance(Rng& rng, const GeneratorOptions& opt = {});

/// Random instance on a connected graph where every state has equal
/// directional weights (perfect balance): a ring with symmetric weights.
FiniteInstance random_balanced_instance(Rng& rng, std::size_t n);

/// Indicators of the first states plus pseudo-random vectors, all standardized
/// under pi; `count` functionals in total.
std::vector<Vector> test_functionals(const Vector& pi, Rng& rng, std::size_t count = 5);

/// Discretized symmetric random walk on a ring of n points over [-L, L) for a
/// standard normal target; directions are clockwise / counter-clockwise, so
/// the instance is perfectly balanced.
FiniteInstance discretized_guided_walk(std::size_t n, double sigma, double half_width = 4.0,
                                       std::size_t reach = 0);


/// DirectionalProposal over the states of a FiniteInstance, for running the
/// step functions against the exact kernels.
class FiniteProposal {
 public:
  using State = std::size_t;
  using Move = std::size_t;

  explicit FiniteProposal(FiniteInstance inst);

  const FiniteInstance& instance() const { return inst_; }

  std::optional<Direction> direction_of(State x, Move y) const;
  double mass(State x, Direction nu) const;
  double mass_after(State, Move y, Direction nu) const { return mass(y, nu); }
  Move sample_conditional(State x, Direction nu, Rng& rng) const;
  Move sample_unconditional(State x, Rng& rng) const;
  double log_ratio(State x, Move y) const;
  void apply(State& x, Move y) const { x = y; }

 private:
  struct Edge {
    std::size_t to;
    double cumulative;
  };
  static Move pick(const std::vector<Edge>& edges, double u);

  FiniteInstance inst_;
  std::vector<double> c_, mass_minus_, mass_plus_;
  std::vector<std::vector<Edge>> all_, minus_, plus_;
};

}  // namespace lifted::exact
