#include "lifted/ising.hpp"

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lifted::ising {

namespace {

constexpr std::size_t kRecomputeEvery = 10000;

}  // namespace

void IsingParams::validate() const {
  if (eta < 1) throw std::invalid_argument("lattice side must be at least 1");
  if (!(coupling > 0.0) && coupling != 0.0)
    throw std::invalid_argument("spatial coupling must be non-negative");
  if (field.size() != sites())
    throw std::invalid_argument("external field has " + std::to_string(field.size()) +
                                " entries, expected " + std::to_string(sites()));
}

std::vector<double> generate_external_field(int eta, double mu, Rng& rng) {
  if (eta < 1) throw std::invalid_argument("lattice side must be at least 1");
  const std::size_t n = static_cast<std::size_t>(eta) * static_cast<std::size_t>(eta);
  std::vector<double> field(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int column = static_cast<int>(k % static_cast<std::size_t>(eta)) + 1;
    const double eps = -0.1 + 0.2 * rng.uniform();
    field[k] = (column <= eta / 2 ? -mu : mu) + eps;
  }
  return field;
}

IsingModel::IsingModel(IsingParams params) : params_(std::move(params)) {
  params_.validate();
  const int eta = params_.eta;
  neighbours_.resize(sites());
  for (int row = 0; row < eta; ++row)
    for (int col = 0; col < eta; ++col) {
      auto& nb = neighbours_[static_cast<std::size_t>(row * eta + col)];
      if (row > 0) nb.push_back((row - 1) * eta + col);
      if (row + 1 < eta) nb.push_back((row + 1) * eta + col);
      if (col > 0) nb.push_back(row * eta + col - 1);
      if (col + 1 < eta) nb.push_back(row * eta + col + 1);
    }
}

double barker_weight_from_delta(double delta) {
  double w;
  if (delta >= 0.0) {
    w = 1.0 / (1.0 + std::exp(-delta));
  } else {
    const double e = std::exp(delta);
    w = e / (1.0 + e);
  }
  return std::max(w, DBL_MIN);
}

// ---------------------------------------------------------------------------

void WeightTree::reset(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  tree_.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    tree_[i + 1] += weights[i];
    const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
    if (parent <= n) tree_[parent] += tree_[i + 1];
  }
  top_bit_ = 1;
  while (top_bit_ * 2 <= n) top_bit_ *= 2;
  if (n == 0) top_bit_ = 0;
}

void WeightTree::add(std::size_t i, double delta) {
  for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
}

double WeightTree::total() const {
  double s = 0.0;
  for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
  return s;
}

std::size_t WeightTree::find(double target) const {
  std::size_t pos = 0;
  for (std::size_t step = top_bit_; step > 0; step /= 2) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  return pos;  // 0-based index of the located element
}

// ---------------------------------------------------------------------------

SpinLattice::SpinLattice(std::shared_ptr<const IsingModel> model, std::vector<std::int8_t> spins)
    : model_(std::move(model)), spins_(std::move(spins)) {
  if (!model_) throw std::invalid_argument("lattice needs a model");
  if (spins_.size() != model_->sites())
    throw std::invalid_argument("spin vector length does not match the lattice");
  for (auto s : spins_)
    if (s != 1 && s != -1) throw std::invalid_argument("spins must be +1 or -1");
  recompute();
}

SpinLattice SpinLattice::all_up(std::shared_ptr<const IsingModel> model) {
  const std::size_t n = model->sites();
  return SpinLattice(std::move(model), std::vector<std::int8_t>(n, 1));
}

SpinLattice SpinLattice::random(std::shared_ptr<const IsingModel> model, Rng& rng) {
  std::vector<std::int8_t> spins(model->sites());
  for (auto& s : spins) s = rng.uniform() < 0.5 ? -1 : 1;
  return SpinLattice(std::move(model), std::move(spins));
}

double SpinLattice::log_ratio_flip(std::size_t i) const {
  if (i >= spins_.size()) throw std::out_of_range("site index out of range");
  const auto& p = model_->params();
  double s = 0.0;
  for (int j : model_->neighbours(i)) s += spins_[static_cast<std::size_t>(j)];
  return -2.0 * spins_[i] * (p.field[i] + p.coupling * s);
}

double SpinLattice::barker_weight(std::size_t i) const {
  return barker_weight_from_delta(log_ratio_flip(i));
}

double SpinLattice::weight_of(std::size_t i, const std::vector<std::int8_t>& spins) const {
  const auto& p = model_->params();
  double s = 0.0;
  for (int j : model_->neighbours(i)) s += spins[static_cast<std::size_t>(j)];
  return barker_weight_from_delta(-2.0 * spins[i] * (p.field[i] + p.coupling * s));
}

double SpinLattice::c_dir(Direction nu) const {
  if (eligible(nu) == 0) return 0.0;
  return nu == Direction::Plus ? c_plus_ : c_minus_;
}

void SpinLattice::recompute() {
  const std::size_t n = spins_.size();
  weights_.resize(n);
  std::vector<double> up(n, 0.0), down(n, 0.0);
  c_minus_ = c_plus_ = 0.0;
  up_count_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = weight_of(i, spins_);
    if (spins_[i] > 0) {
      up[i] = weights_[i];
      c_minus_ += weights_[i];
      ++up_count_;
    } else {
      down[i] = weights_[i];
      c_plus_ += weights_[i];
    }
  }
  up_tree_.reset(up);
  down_tree_.reset(down);
  updates_since_recompute_ = 0;
}

void SpinLattice::set_weight(std::size_t i, double w) {
  const double old = weights_[i];
  weights_[i] = w;
  if (spins_[i] > 0) {
    c_minus_ += w - old;
    up_tree_.add(i, w - old);
  } else {
    c_plus_ += w - old;
    down_tree_.add(i, w - old);
  }
}

void SpinLattice::apply_flip(std::size_t i) {
  if (i >= spins_.size()) throw std::out_of_range("site index out of range");
  // Move site i's weight to the other direction set before refreshing it.
  const double w = weights_[i];
  if (spins_[i] > 0) {
    c_minus_ -= w;
    up_tree_.add(i, -w);
    c_plus_ += w;
    down_tree_.add(i, w);
    --up_count_;
  } else {
    c_plus_ -= w;
    down_tree_.add(i, -w);
    c_minus_ += w;
    up_tree_.add(i, w);
    ++up_count_;
  }
  spins_[i] = static_cast<std::int8_t>(-spins_[i]);
  set_weight(i, weight_of(i, spins_));
  for (int j : model_->neighbours(i))
    set_weight(static_cast<std::size_t>(j), weight_of(static_cast<std::size_t>(j), spins_));
  if (++updates_since_recompute_ >= kRecomputeEvery) recompute();
}

std::optional<std::size_t> SpinLattice::sample_flip_direction(Direction nu, Rng& rng) const {
  if (eligible(nu) == 0) return std::nullopt;
  const WeightTree& tree = nu == Direction::Plus ? down_tree_ : up_tree_;
  const int want = -sign(nu);
  const double total = c_dir(nu);
  const double u = rng.uniform();
  std::size_t i = tree.find(u * total);
  if (i < spins_.size() && spins_[i] == want) return i;
  // Rounding pushed the search off the eligible set; fall back to a scan.
  double target = u * total, acc = 0.0;
  std::size_t last = spins_.size();
  for (std::size_t k = 0; k < spins_.size(); ++k) {
    if (spins_[k] != want) continue;
    last = k;
    acc += weights_[k];
    if (target < acc) return k;
  }
  return last;
}

std::size_t SpinLattice::sample_flip(Rng& rng) const {
  // Pick the direction set with probability c_nu / c, then a site within it.
  const double u = rng.uniform() * c();
  const Direction nu = u < c_dir(Direction::Minus) ? Direction::Minus : Direction::Plus;
  auto i = sample_flip_direction(nu, rng);
  if (!i) i = sample_flip_direction(-nu, rng);
  return *i;
}

std::pair<double, double> SpinLattice::masses_after_flip(std::size_t i) const {
  if (i >= spins_.size()) throw std::out_of_range("site index out of range");
  double cm = c_minus_, cp = c_plus_;
  auto remove = [&](std::size_t j) { (spins_[j] > 0 ? cm : cp) -= weights_[j]; };
  remove(i);
  for (int j : model_->neighbours(i)) remove(static_cast<std::size_t>(j));

  // Weights of i and its neighbours once spin i is negated.
  const auto& p = model_->params();
  auto weight_flipped = [&](std::size_t j) {
    double nb = 0.0;
    for (int k : model_->neighbours(j)) {
      const auto kk = static_cast<std::size_t>(k);
      nb += kk == i ? -spins_[kk] : spins_[kk];
    }
    const int sj = j == i ? -spins_[j] : spins_[j];
    return std::pair{sj, barker_weight_from_delta(-2.0 * sj * (p.field[j] + p.coupling * nb))};
  };
  auto insert = [&](std::size_t j) {
    const auto [sj, w] = weight_flipped(j);
    (sj > 0 ? cm : cp) += w;
  };
  insert(i);
  for (int j : model_->neighbours(i)) insert(static_cast<std::size_t>(j));

  const std::size_t up_after = up_count_ + (spins_[i] > 0 ? 0 : 1) - (spins_[i] > 0 ? 1 : 0);
  if (up_after == 0) cm = 0.0;
  if (up_after == spins_.size()) cp = 0.0;
  return {std::max(cm, up_after == 0 ? 0.0 : DBL_MIN),
          std::max(cp, up_after == spins_.size() ? 0.0 : DBL_MIN)};
}

long SpinLattice::magnetisation() const {
  long m = 0;
  for (auto s : spins_) m += s;
  return m;
}

double SpinLattice::cache_error() const {
  double err = 0.0, cm = 0.0, cp = 0.0;
  for (std::size_t i = 0; i < spins_.size(); ++i) {
    const double w = weight_of(i, spins_);
    err = std::max(err, std::abs(w - weights_[i]));
    (spins_[i] > 0 ? cm : cp) += w;
  }
  err = std::max(err, std::abs(cm - c_minus_));
  err = std::max(err, std::abs(cp - c_plus_));
  err = std::max(err, std::abs(up_tree_.total() - c_minus_));
  err = std::max(err, std::abs(down_tree_.total() - c_plus_));
  return err;
}

long magnetisation(const SpinLattice& x) { return x.magnetisation(); }

// ---------------------------------------------------------------------------

std::optional<Direction> IsingProposal::direction_of(const State& x, const Move& m) const {
  if (m.site >= x.sites()) return std::nullopt;
  return x.spin(m.site) < 0 ? Direction::Plus : Direction::Minus;
}

double IsingProposal::mass(const State& x, Direction nu) const {
  const double cnu = x.c_dir(nu);
  if (cnu <= 0.0) return 0.0;
  return cnu / x.c();
}

double IsingProposal::mass_after(const State& x, Move& m, Direction nu) const {
  if (!m.after) m.after = x.masses_after_flip(m.site);
  const double cnu = nu == Direction::Plus ? m.after->second : m.after->first;
  if (cnu <= 0.0) return 0.0;
  return cnu / (m.after->first + m.after->second);
}

IsingProposal::Move IsingProposal::sample_conditional(const State& x, Direction nu,
                                                      Rng& rng) const {
  auto i = x.sample_flip_direction(nu, rng);
  if (!i) throw ContractViolation("conditional draw from an empty direction");
  return {*i, std::nullopt};
}

IsingProposal::Move IsingProposal::sample_unconditional(const State& x, Rng& rng) const {
  return {x.sample_flip(rng), std::nullopt};
}

double IsingProposal::log_ratio(const State& x, Move& m) const {
  // log [pi(y) w_i(y) / c(y)] - log [pi(x) w_i(x) / c(x)]
  if (!m.after) m.after = x.masses_after_flip(m.site);
  const double delta = x.log_ratio_flip(m.site);
  const double c_after = m.after->first + m.after->second;
  return delta + std::log(barker_weight_from_delta(-delta)) - std::log(x.cached_weight(m.site)) -
         std::log(c_after) + std::log(x.c());
}

// ---------------------------------------------------------------------------

std::vector<std::int8_t> spins_from_index(std::uint32_t index, std::size_t sites) {
  std::vector<std::int8_t> spins(sites);
  for (std::size_t i = 0; i < sites; ++i) spins[i] = (index >> i) & 1U ? 1 : -1;
  return spins;
}

namespace {

void require_enumerable(const IsingParams& params) {
  params.validate();
  if (params.eta > kMaxEnumerationEta)
    throw std::length_error("exact enumeration supports lattices up to 3x3, got side " +
                            std::to_string(params.eta));
}

double log_unnormalized(const IsingParams& p, const std::vector<std::int8_t>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += p.field[i] * x[i];
  for (int row = 0; row < p.eta; ++row)
    for (int col = 0; col < p.eta; ++col) {
      const std::size_t k = static_cast<std::size_t>(row * p.eta + col);
      if (col + 1 < p.eta) s += p.coupling * x[k] * x[k + 1];
      if (row + 1 < p.eta) s += p.coupling * x[k] * x[k + static_cast<std::size_t>(p.eta)];
    }
  return s;
}

}  // namespace

exact::Vector enumerate_target(const IsingParams& params) {
  require_enumerable(params);
  const std::size_t n = params.sites();
  const std::size_t states = std::size_t{1} << n;
  exact::Vector logp(static_cast<Eigen::Index>(states));
  for (std::size_t s = 0; s < states; ++s)
    logp(static_cast<Eigen::Index>(s)) =
        log_unnormalized(params, spins_from_index(static_cast<std::uint32_t>(s), n));
  const double top = logp.maxCoeff();
  exact::Vector p = (logp.array() - top).exp();
  return p / p.sum();
}

exact::FiniteInstance finite_instance(const IsingParams& params) {
  require_enumerable(params);
  const std::size_t n = params.sites();
  const std::size_t states = std::size_t{1} << n;
  auto model = std::make_shared<const IsingModel>(params);
  exact::FiniteInstance inst;
  inst.n = states;
  inst.pi = enumerate_target(params);
  const auto N = static_cast<Eigen::Index>(states);
  inst.q = exact::Matrix::Zero(N, N);
  inst.dir.setZero(N, N);
  for (std::size_t s = 0; s < states; ++s) {
    const SpinLattice x(model, spins_from_index(static_cast<std::uint32_t>(s), n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = s ^ (std::size_t{1} << i);
      const auto a = static_cast<Eigen::Index>(s), b = static_cast<Eigen::Index>(t);
      inst.q(a, b) = x.cached_weight(i);
      inst.dir(a, b) = static_cast<std::int8_t>(x.spin(i) < 0 ? 1 : -1);
    }
  }
  inst.validate();
  return inst;
}

exact::Vector magnetisation_vector(std::size_t sites) {
  const std::size_t states = std::size_t{1} << sites;
  exact::Vector m(static_cast<Eigen::Index>(states));
  for (std::size_t s = 0; s < states; ++s) {
    long total = 0;
    for (auto v : spins_from_index(static_cast<std::uint32_t>(s), sites)) total += v;
    m(static_cast<Eigen::Index>(s)) = static_cast<double>(total);
  }
  return m;
}

}  // namespace lifted::ising
