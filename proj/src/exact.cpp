#include "lifted/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lifted::exact {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::string pair_name(std::size_t x, std::size_t y) {
  std::ostringstream os;
  os << "(" << x << ", " << y << ")";
  return os.str();
}

Direction to_direction(std::int8_t d) { return d > 0 ? Direction::Plus : Direction::Minus; }

// Literal proposal densities used by the reversible variant.
//   Q(x,y)       = q(x,y) / c(x)
//   Qtilde(x,y)  = Q_nu(x,y) / 2 with nu = dir(x,y)
struct ProposalView {
  const FiniteInstance& inst;
  std::vector<double> c, c_minus, c_plus;
  std::vector<bool> boundary;

  explicit ProposalView(const FiniteInstance& in) : inst(in) {
    c.resize(in.n);
    c_minus.resize(in.n);
    c_plus.resize(in.n);
    boundary.resize(in.n);
    for (std::size_t x = 0; x < in.n; ++x) {
      c_minus[x] = in.c_dir(x, Direction::Minus);
      c_plus[x] = in.c_dir(x, Direction::Plus);
      c[x] = in.c(x);
      boundary[x] = c_minus[x] <= 0.0 || c_plus[x] <= 0.0;
    }
  }

  double c_dir(std::size_t x, Direction nu) const {
    return nu == Direction::Plus ? c_plus[x] : c_minus[x];
  }
  double log_q(std::size_t x, std::size_t y) const {
    return std::log(inst.q(idx(x), idx(y))) - std::log(c[x]);
  }
  double log_q_tilde(std::size_t x, std::size_t y) const {
    const Direction nu = to_direction(inst.dir(idx(x), idx(y)));
    return std::log(0.5) + std::log(inst.q(idx(x), idx(y))) - std::log(c_dir(x, nu));
  }

  double log_mh_ratio(std::size_t x, std::size_t y) const {
    return std::log(inst.pi(idx(y))) + log_q(y, x) - std::log(inst.pi(idx(x))) - log_q(x, y);
  }

  // Four-case ratio of the reversible variant, by boundary membership of x, y.
  double log_rev_ratio(std::size_t x, std::size_t y) const {
    const double log_pi = std::log(inst.pi(idx(y))) - std::log(inst.pi(idx(x)));
    const bool bx = boundary[x], by = boundary[y];
    if (!bx && !by) return log_pi + log_q_tilde(y, x) - log_q_tilde(x, y);
    if (!bx && by) return log_pi + log_q(y, x) - std::log(2.0) - log_q_tilde(x, y);
    if (bx && !by) return log_pi + std::log(2.0) + log_q_tilde(y, x) - log_q(x, y);
    return log_pi + log_q(y, x) - log_q(x, y);
  }
};

void fill_diagonal(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    double off = 0.0;
    for (Index j = 0; j < m.cols(); ++j)
      if (j != i) off += m(i, j);
    m(i, i) = std::max(0.0, 1.0 - off);
  }
}

void require_square(const DenseKernel& p, Index n, const char* what) {
  if (p.m.rows() != p.m.cols() || p.m.rows() != n)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// FiniteInstance

double FiniteInstance::c_dir(std::size_t x, Direction nu) const {
  const std::int8_t want = static_cast<std::int8_t>(sign(nu));
  double s = 0.0;
  for (std::size_t y = 0; y < n; ++y)
    if (dir(idx(x), idx(y)) == want) s += q(idx(x), idx(y));
  return s;
}

bool FiniteInstance::perfectly_balanced(double tol) const {
  for (std::size_t x = 0; x < n; ++x) {
    const double cm = c_dir(x, Direction::Minus), cp = c_dir(x, Direction::Plus);
    if (std::abs(cm - cp) > tol * std::max(cm, cp)) return false;
  }
  return true;
}

void FiniteInstance::validate() const {
  const Index N = idx(n);
  if (n == 0) throw InstanceError("instance has no states");
  if (pi.size() != N || q.rows() != N || q.cols() != N || dir.rows() != N || dir.cols() != N)
    throw InstanceError("instance arrays do not match n = " + std::to_string(n));
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (!(pi(idx(x)) > 0.0) || !std::isfinite(pi(idx(x))))
      throw InstanceError("pi must be positive at state " + std::to_string(x));
    total += pi(idx(x));
  }
  if (std::abs(total - 1.0) > 1e-10) throw InstanceError("pi does not sum to 1");
  for (std::size_t x = 0; x < n; ++x) {
    if (q(idx(x), idx(x)) != 0.0 || dir(idx(x), idx(x)) != 0)
      throw InstanceError("state " + std::to_string(x) + " is its own neighbour");
    bool any = false;
    for (std::size_t y = 0; y < n; ++y) {
      const double w = q(idx(x), idx(y)), back = q(idx(y), idx(x));
      const int d = dir(idx(x), idx(y)), dback = dir(idx(y), idx(x));
      if (!(w >= 0.0) || !std::isfinite(w))
        throw InstanceError("proposal weight invalid at " + pair_name(x, y));
      if ((w > 0.0) != (back > 0.0))
        throw InstanceError("proposal support not symmetric at " + pair_name(x, y));
      if ((w > 0.0) != (d != 0))
        throw InstanceError("direction label does not match support at " + pair_name(x, y));
      if (d != 0 && d != 1 && d != -1)
        throw InstanceError("direction label out of range at " + pair_name(x, y));
      if (d != -dback)
        throw InstanceError("direction flip condition violated at " + pair_name(x, y));
      any = any || w > 0.0;
    }
    if (!any) throw InstanceError("state " + std::to_string(x) + " has no neighbours");
  }
}

nlohmann::json FiniteInstance::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  auto& jq = j["q"] = nlohmann::json::array();
  auto& jd = j["dir"] = nlohmann::json::array();
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> row(n);
    std::vector<int> drow(n);
    for (std::size_t y = 0; y < n; ++y) {
      row[y] = q(idx(x), idx(y));
      drow[y] = dir(idx(x), idx(y));
    }
    jq.push_back(row);
    jd.push_back(drow);
  }
  return j;
}

FiniteInstance FiniteInstance::from_json(const nlohmann::json& j) {
  FiniteInstance inst;
  inst.n = j.at("n").get<std::size_t>();
  const auto pi = j.at("pi").get<std::vector<double>>();
  const auto q = j.at("q").get<std::vector<std::vector<double>>>();
  const auto dir = j.at("dir").get<std::vector<std::vector<int>>>();
  const Index N = idx(inst.n);
  if (pi.size() != inst.n || q.size() != inst.n || dir.size() != inst.n)
    throw InstanceError("instance JSON arrays do not match n");
  inst.pi = Eigen::Map<const Vector>(pi.data(), N);
  inst.q.resize(N, N);
  inst.dir.resize(N, N);
  for (std::size_t x = 0; x < inst.n; ++x) {
    if (q[x].size() != inst.n || dir[x].size() != inst.n)
      throw InstanceError("instance JSON row " + std::to_string(x) + " has wrong length");
    for (std::size_t y = 0; y < inst.n; ++y) {
      inst.q(idx(x), idx(y)) = q[x][y];
      inst.dir(idx(x), idx(y)) = static_cast<std::int8_t>(dir[x][y]);
    }
  }
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// Kernels

DenseKernel build_mh_kernel(const FiniteInstance& inst, BalancingFunction phi) {
  inst.validate();
  const ProposalView view(inst);
  const Index N = idx(inst.n);
  DenseKernel k{Matrix::Zero(N, N), false};
  for (std::size_t x = 0; x < inst.n; ++x)
    for (std::size_t y = 0; y < inst.n; ++y) {
      if (inst.q(idx(x), idx(y)) <= 0.0) continue;
      k.m(idx(x), idx(y)) = std::exp(view.log_q(x, y)) * phi.from_log(view.log_mh_ratio(x, y));
    }
  fill_diagonal(k.m);
  return k;
}

DenseKernel build_rev_kernel(const FiniteInstance& inst, BalancingFunction phi) {
  inst.validate();
  const ProposalView view(inst);
  const Index N = idx(inst.n);
  DenseKernel k{Matrix::Zero(N, N), false};
  for (std::size_t x = 0; x < inst.n; ++x)
    for (std::size_t y = 0; y < inst.n; ++y) {
      if (inst.q(idx(x), idx(y)) <= 0.0) continue;
      // Q_rev(x, .) = Qtilde(x, .) inside, delta_x / 2 + Q(x, .) / 2 on the boundary.
      const double proposal =
          view.boundary[x] ? 0.5 * std::exp(view.log_q(x, y)) : std::exp(view.log_q_tilde(x, y));
      k.m(idx(x), idx(y)) = proposal * phi.from_log(view.log_rev_ratio(x, y));
    }
  fill_diagonal(k.m);
  return k;
}

DenseKernel build_lifted_kernel(const FiniteInstance& inst, BalancingFunction phi,
                                LiftedRatio ratio) {
  inst.validate();
  const ProposalView view(inst);
  const std::size_t n = inst.n;
  DenseKernel k{Matrix::Zero(2 * idx(n), 2 * idx(n)), true};
  for (Direction nu : {Direction::Minus, Direction::Plus}) {
    const std::int8_t want = static_cast<std::int8_t>(sign(nu));
    for (std::size_t x = 0; x < n; ++x) {
      const Index from = DenseKernel::lifted_index(n, x, nu);
      const Index flipped = DenseKernel::lifted_index(n, x, -nu);
      const double cnu = view.c_dir(x, nu);
      if (cnu <= 0.0) {
        k.m(from, flipped) = 1.0;
        continue;
      }
      double moved = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        if (inst.dir(idx(x), idx(y)) != want) continue;
        const double proposal = inst.q(idx(x), idx(y)) / cnu;
        const double log_r = ratio == LiftedRatio::Directional ? view.log_rev_ratio(x, y)
                                                               : view.log_mh_ratio(x, y);
        const double p = proposal * phi.from_log(log_r);
        k.m(from, DenseKernel::lifted_index(n, y, nu)) = p;
        moved += p;
      }
      k.m(from, flipped) = std::max(0.0, 1.0 - moved);
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Residuals

Vector extend_distribution(const DenseKernel& p, const Vector& pi) {
  if (!p.lifted) return pi;
  Vector out(2 * pi.size());
  out << 0.5 * pi, 0.5 * pi;
  return out;
}

Vector extend_function(const DenseKernel& p, const Vector& f) {
  if (!p.lifted) return f;
  Vector out(2 * f.size());
  out << f, f;
  return out;
}

double stationarity_residual(const DenseKernel& p, const Vector& pi) {
  const Index base = p.lifted ? p.m.rows() / 2 : p.m.rows();
  if (pi.size() != base || (p.lifted && p.m.rows() % 2 != 0))
    throw std::invalid_argument("stationarity_residual: dimension mismatch");
  require_square(p, p.m.rows(), "stationarity_residual");
  const Vector ext = extend_distribution(p, pi);
  const Vector moved = p.m.transpose() * ext;
  return (moved - ext).cwiseAbs().maxCoeff();
}

double detailed_balance_residual(const DenseKernel& p, const Vector& pi) {
  require_square(p, pi.size(), "detailed_balance_residual");
  const Matrix flow = pi.asDiagonal() * p.m;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

double skewed_db_residual(const DenseKernel& lifted, const Vector& pi) {
  const Index n = pi.size();
  if (!lifted.lifted || lifted.m.rows() != 2 * n || lifted.m.cols() != 2 * n)
    throw std::invalid_argument("skewed_db_residual: expected a lifted kernel over pi");
  const auto& m = lifted.m;
  // Lifted moves keep the direction except for the in-place flip.
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      const bool bad_cross = x != y && (m(x, n + y) != 0.0 || m(n + x, y) != 0.0);
      const bool bad_stay = x == y && (m(x, y) != 0.0 || m(n + x, n + y) != 0.0);
      if (bad_cross || bad_stay)
        throw std::invalid_argument("skewed_db_residual: malformed lifted block structure");
    }
  double worst = 0.0;
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      if (x == y) continue;
      const double forward = pi(x) * m(n + x, n + y);
      const double backward = pi(y) * m(y, x);
      worst = std::max(worst, std::abs(forward - backward));
    }
  return worst;
}

double row_sum_residual(const DenseKernel& p) {
  return (p.m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

PeskunMargin peskun_bound_margin(const DenseKernel& rev, const DenseKernel& mh) {
  if (rev.lifted || mh.lifted || rev.m.rows() != mh.m.rows() || rev.m.cols() != mh.m.cols())
    throw std::invalid_argument("peskun_bound_margin: dimension mismatch");
  PeskunMargin out{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
  for (Index x = 0; x < rev.m.rows(); ++x)
    for (Index y = 0; y < rev.m.cols(); ++y) {
      if (x == y) continue;
      const double gap = rev.m(x, y) - 0.5 * mh.m(x, y);
      out.margin = std::min(out.margin, gap);
      if (mh.m(x, y) > 0.0) out.relative_margin = std::min(out.relative_margin, gap / mh.m(x, y));
    }
  if (!std::isfinite(out.margin)) out.margin = 0.0;
  if (!std::isfinite(out.relative_margin)) out.relative_margin = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Variances

double variance_under(const Vector& pi, const Vector& f) {
  const double mean = pi.dot(f);
  return pi.dot((f.array() - mean).square().matrix());
}

Vector standardize_under(const Vector& pi, const Vector& f) {
  const double mean = pi.dot(f);
  const double sd = std::sqrt(variance_under(pi, f));
  if (!(sd > 0.0)) throw std::domain_error("functional is constant under pi");
  return (f.array() - mean) / sd;
}

VarianceSolver::VarianceSolver(const DenseKernel& p, const Vector& pi)
    : kernel_(&p), pi_(extend_distribution(p, pi)) {
  const Index n = p.m.rows();
  if (pi_.size() != n) throw std::invalid_argument("VarianceSolver: dimension mismatch");
  // (I - P + 1 pi^T) is invertible iff P has a single recurrent class; its
  // solution of the Poisson equation is automatically pi-centred.
  Matrix a = Matrix::Identity(n, n) - p.m;
  a.rowwise() += pi_.transpose();
  lu_.compute(a);
  const double rc = lu_.rcond();
  if (!(rc > 1e-13)) throw NonErgodicError("kernel is not ergodic (Poisson system singular)");
}

double VarianceSolver::asymptotic_variance(const Vector& f) const {
  const Vector fe = extend_function(*kernel_, f);
  if (fe.size() != pi_.size()) throw std::invalid_argument("asymptotic_variance: dimension mismatch");
  const Vector centred = fe.array() - pi_.dot(fe);
  const Vector g = lu_.solve(centred);
  const Vector weighted = pi_.cwiseProduct(centred);
  const double base = weighted.dot(centred);
  const double v = 2.0 * weighted.dot(g) - base;
  if (v < 0.0 && v > -1e-9 * (1.0 + base)) return 0.0;
  return v;
}

double asymptotic_variance_exact(const DenseKernel& p, const Vector& pi, const Vector& f) {
  return VarianceSolver(p, pi).asymptotic_variance(f);
}

std::vector<double> lambda_variances(const DenseKernel& p, const Vector& pi,
                                     const std::vector<Vector>& fs, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw std::domain_error("lambda must lie in [0, 1)");
  const Vector ext = extend_distribution(p, pi);
  const Index n = p.m.rows();
  if (ext.size() != n) throw std::invalid_argument("lambda_variance: dimension mismatch");
  const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - lambda * p.m);
  std::vector<double> out;
  out.reserve(fs.size());
  for (const auto& f : fs) {
    const Vector fe = extend_function(p, f);
    const Vector centred = fe.array() - ext.dot(fe);
    const Vector h = lu.solve(centred);
    const Vector weighted = ext.cwiseProduct(centred);
    const double base = weighted.dot(centred);
    out.push_back(base + 2.0 * weighted.dot(h - centred));
  }
  return out;
}

double lambda_variance_exact(const DenseKernel& p, const Vector& pi, const Vector& f,
                             double lambda) {
  return lambda_variances(p, pi, {f}, lambda).front();
}

KernelTriple build_kernels(const FiniteInstance& inst, BalancingFunction phi) {
  return {build_mh_kernel(inst, phi), build_rev_kernel(inst, phi), build_lifted_kernel(inst, phi)};
}

std::vector<Theorem1Report> theorem1_certificates(const KernelTriple& k, const Vector& pi,
                                                  const std::vector<Vector>& fs) {
  const VarianceSolver mh(k.mh, pi), rev(k.rev, pi), lifted(k.lifted, pi);
  std::vector<Theorem1Report> out;
  for (const auto& f : fs) {
    Theorem1Report r;
    r.var_mh = mh.asymptotic_variance(f);
    r.var_rev = rev.asymptotic_variance(f);
    r.var_lifted = lifted.asymptotic_variance(f);
    r.var_f = variance_under(pi, f);
    r.lifted_le_rev = r.var_lifted <= r.var_rev + kTheorem1Slack;
    r.rev_le_bound = r.var_rev <= 2.0 * r.var_mh + r.var_f + kTheorem1Slack;
    out.push_back(r);
  }
  return out;
}

Theorem1Report theorem1_certificate(const FiniteInstance& inst, const Vector& f,
                                    BalancingFunction phi) {
  return theorem1_certificates(build_kernels(inst, phi), inst.pi, {f}).front();
}

// ---------------------------------------------------------------------------
// Generators

namespace {

FiniteInstance empty_instance(std::size_t n) {
  FiniteInstance inst;
  inst.n = n;
  inst.pi = Vector::Zero(idx(n));
  inst.q = Matrix::Zero(idx(n), idx(n));
  inst.dir = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(idx(n), idx(n));
  return inst;
}

void set_edge(FiniteInstance& inst, std::size_t x, std::size_t y, int d) {
  inst.dir(idx(x), idx(y)) = static_cast<std::int8_t>(d);
  inst.dir(idx(y), idx(x)) = static_cast<std::int8_t>(-d);
}

}  // namespace

FiniteInstance random_instance(Rng& rng, const GeneratorOptions& opt) {
  if (opt.min_states < 2 || opt.max_states < opt.min_states)
    throw std::invalid_argument("random_instance: need 2 <= min_states <= max_states");
  const std::size_t n = opt.min_states + rng.index(opt.max_states - opt.min_states + 1);
  FiniteInstance inst = empty_instance(n);

  for (std::size_t x = 0; x < n; ++x) inst.pi(idx(x)) = -std::log(rng.uniform_open());
  inst.pi /= inst.pi.sum();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  auto random_sign = [&] { return rng.uniform() < 0.5 ? -1 : 1; };
  for (std::size_t i = 1; i < n; ++i) set_edge(inst, order[i], order[rng.index(i)], random_sign());
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      if (inst.dir(idx(x), idx(y)) == 0 && rng.uniform() < opt.edge_probability)
        set_edge(inst, x, y, random_sign());

  // One state with all of its edges pointing the same way.
  const std::size_t b = rng.index(n);
  const int s = random_sign();
  for (std::size_t y = 0; y < n; ++y)
    if (inst.dir(idx(b), idx(y)) != 0) set_edge(inst, b, y, s);

  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (inst.dir(idx(x), idx(y)) != 0)
        inst.q(idx(x), idx(y)) =
            std::exp(opt.log_weight_range * (2.0 * rng.uniform() - 1.0));
  inst.validate();
  return inst;
}

FiniteInstance random_balanced_instance(Rng& rng, std::size_t n) {
  if (n < 3) throw std::invalid_argument("random_balanced_instance: need n >= 3");
  FiniteInstance inst = empty_instance(n);
  for (std::size_t x = 0; x < n; ++x) inst.pi(idx(x)) = -std::log(rng.uniform_open());
  inst.pi /= inst.pi.sum();
  const std::size_t reach = n >= 5 ? 2 : 1;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t d = 1; d <= reach; ++d) set_edge(inst, x, (x + d) % n, 1);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t d = 1; d <= reach; ++d) {
      // Equal weight forwards and backwards at distance d keeps c_-(x) = c_+(x).
      const double w = std::exp(2.0 * (2.0 * rng.uniform() - 1.0));
      inst.q(idx(x), idx((x + d) % n)) = w;
      inst.q(idx(x), idx((x + n - d) % n)) = w;
    }
  inst.validate();
  return inst;
}

std::vector<Vector> test_functionals(const Vector& pi, Rng& rng, std::size_t count) {
  const std::size_t n = static_cast<std::size_t>(pi.size());
  std::vector<Vector> out;
  for (std::size_t s = 0; s < std::min<std::size_t>(n, count - 1) && out.size() + 1 < count; ++s) {
    Vector f = Vector::Zero(pi.size());
    f(idx(s)) = 1.0;
    out.push_back(standardize_under(pi, f));
  }
  while (out.size() < count) {
    Vector f(pi.size());
    for (Index i = 0; i < f.size(); ++i) f(i) = rng.normal();
    out.push_back(standardize_under(pi, f));
  }
  return out;
}

FiniteInstance discretized_guided_walk(std::size_t n, double sigma, double half_width,
                                       std::size_t reach) {
  if (n < 4) throw std::invalid_argument("discretized_guided_walk: need n >= 4");
  if (reach == 0) reach = (n - 1) / 2;
  if (2 * reach >= n) throw std::invalid_argument("discretized_guided_walk: reach too large");
  FiniteInstance inst = empty_instance(n);
  const double h = 2.0 * half_width / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -half_width + (static_cast<double>(i) + 0.5) * h;
    inst.pi(idx(i)) = std::exp(-0.5 * x * x);
  }
  inst.pi /= inst.pi.sum();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 1; d <= reach; ++d) {
      const double z = static_cast<double>(d) * h / sigma;
      const double w = std::exp(-0.5 * z * z);
      set_edge(inst, i, (i + d) % n, 1);
      inst.q(idx(i), idx((i + d) % n)) = w;
      inst.q(idx(i), idx((i + n - d) % n)) = w;
    }
  inst.validate();
  return inst;
}

}  // namespace lifted::exact

namespace lifted::exact {

FiniteProposal::FiniteProposal(FiniteInstance inst) : inst_(std::move(inst)) {
  inst_.validate();
  const std::size_t n = inst_.n;
  c_.resize(n);
  mass_minus_.resize(n);
  mass_plus_.resize(n);
  all_.resize(n);
  minus_.resize(n);
  plus_.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    double call = 0.0, cm = 0.0, cp = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      const double w = inst_.q(idx(x), idx(y));
      if (w <= 0.0) continue;
      call += w;
      all_[x].push_back({y, call});
      if (inst_.dir(idx(x), idx(y)) > 0) {
        cp += w;
        plus_[x].push_back({y, cp});
      } else {
        cm += w;
        minus_[x].push_back({y, cm});
      }
    }
    c_[x] = call;
    mass_minus_[x] = cm / call;
    mass_plus_[x] = cp / call;
  }
}

FiniteProposal::Move FiniteProposal::pick(const std::vector<Edge>& edges, double u) {
  const double target = u * edges.back().cumulative;
  for (const auto& e : edges)
    if (target < e.cumulative) return e.to;
  return edges.back().to;
}

std::optional<Direction> FiniteProposal::direction_of(State x, Move y) const {
  if (x >= inst_.n || y >= inst_.n) return std::nullopt;
  const int d = inst_.dir(idx(x), idx(y));
  if (d == 0) return std::nullopt;
  return to_direction(static_cast<std::int8_t>(d));
}

double FiniteProposal::mass(State x, Direction nu) const {
  return nu == Direction::Plus ? mass_plus_[x] : mass_minus_[x];
}

FiniteProposal::Move FiniteProposal::sample_conditional(State x, Direction nu, Rng& rng) const {
  const auto& edges = nu == Direction::Plus ? plus_[x] : minus_[x];
  if (edges.empty()) throw ContractViolation("conditional draw from an empty direction");
  return pick(edges, rng.uniform());
}

FiniteProposal::Move FiniteProposal::sample_unconditional(State x, Rng& rng) const {
  return pick(all_[x], rng.uniform());
}

double FiniteProposal::log_ratio(State x, Move y) const {
  return std::log(inst_.pi(idx(y))) + std::log(inst_.q(idx(y), idx(x))) - std::log(c_[y]) -
         std::log(inst_.pi(idx(x))) - std::log(inst_.q(idx(x), idx(y))) + std::log(c_[x]);
}

}  // namespace lifted::exact
