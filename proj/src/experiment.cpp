#include "lifted/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "lifted/barker1d.hpp"
#include "lifted/ising.hpp"

namespace lifted {

namespace {

// Stream labels for derive_seed; distinct from any point index.
constexpr std::uint64_t kFieldStream = 0xF1E1D0000ULL;
constexpr std::uint64_t kPilotStream = 0x9110700000ULL;
constexpr std::uint64_t kVerifyStream = 0x7E21F10000ULL;

constexpr long kPilotIterations = 100000;
constexpr long kPilotBurnIn = 10000;

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool has_bound_column(ExperimentKind kind) {
  return kind == ExperimentKind::IsingMuSweep || kind == ExperimentKind::BarkerTable;
}

std::vector<double> range_points(double lo, double hi, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + step * i;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::IsingEtaSweep: return "ising_eta_sweep";
    case ExperimentKind::IsingMuSweep: return "ising_mu_sweep";
    case ExperimentKind::BarkerTable: return "barker_table";
    case ExperimentKind::GuidedWalk: return "guided_walk";
    case ExperimentKind::Counterexample: return "counterexample";
  }
  return "?";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (auto k : {ExperimentKind::Verify, ExperimentKind::IsingEtaSweep, ExperimentKind::IsingMuSweep,
                 ExperimentKind::BarkerTable, ExperimentKind::GuidedWalk,
                 ExperimentKind::Counterexample})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::Verify: break;
    case ExperimentKind::IsingMuSweep:
      c.points = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
      c.eta = 10;
      c.replicates = 10;
      break;
    case ExperimentKind::IsingEtaSweep:
      c.points = {10, 20, 30, 40, 50};
      c.mu = 1.0;
      c.replicates = 10;
      break;
    case ExperimentKind::BarkerTable: c.points = {2.0, 2.2, 2.5}; break;
    case ExperimentKind::GuidedWalk: c.points = {2.5}; break;
    case ExperimentKind::Counterexample:
      c.points = range_points(0.0, 10.0, 1.0);
      c.sigma = 0.5;
      break;
  }
  return c;
}

bool ExperimentConfig::is_sampling() const {
  return experiment != ExperimentKind::Verify && experiment != ExperimentKind::Counterexample;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  std::vector<std::string> problems;
  ExperimentConfig c;
  try {
    c = defaults(parse_experiment(j.at("experiment").get<std::string>()));
  } catch (const std::exception& e) {
    throw ConfigError({std::string("experiment: ") + e.what()});
  }
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const std::exception& e) {
      problems.push_back(std::string(key) + ": " + e.what());
    }
  };
  if (j.contains("samplers")) {
    c.samplers.clear();
    try {
      for (const auto& s : j.at("samplers")) c.samplers.push_back(parse_sampler(s.get<std::string>()));
    } catch (const std::exception& e) {
      problems.push_back(std::string("samplers: ") + e.what());
    }
  }
  read("points", c.points);
  read("eta", c.eta);
  read("coupling", c.coupling);
  read("mu", c.mu);
  read("sigma", c.sigma);
  read("iterations", c.iterations);
  read("burn_in", c.burn_in);
  read("replicates", c.replicates);
  read("seed", c.seed);
  read("output", c.output_path);
  read("threads", c.threads);
  read("instances", c.instances);
  read("inject_fault", c.inject_fault);
  static const char* known[] = {"experiment", "samplers", "points",     "eta",       "coupling",
                                "mu",         "sigma",    "iterations", "burn_in",   "replicates",
                                "seed",       "output",   "threads",    "instances", "inject_fault"};
  for (const auto& item : j.items())
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return item.key() == k; }) == std::end(known))
      problems.push_back("unknown field '" + item.key() + "'");
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = to_string(experiment);
  std::vector<std::string> names;
  for (auto s : samplers) names.push_back(to_string(s));
  j["samplers"] = names;
  j["points"] = points;
  j["eta"] = eta;
  j["coupling"] = coupling;
  j["mu"] = mu;
  j["sigma"] = sigma;
  j["iterations"] = iterations;
  j["burn_in"] = effective_burn_in();
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["instances"] = instances;
  j["inject_fault"] = inject_fault;
  return j;
}

std::vector<std::string> ExperimentConfig::violations() const {
  std::vector<std::string> v;
  if (is_sampling()) {
    const long b = effective_burn_in();
    if (iterations <= 0) v.push_back("iterations must be positive");
    if (b < 0 || b >= iterations) v.push_back("burn_in must satisfy 0 <= burn_in < iterations");
    else if (iterations - b < static_cast<long>(kMinTraceLength))
      v.push_back("iterations - burn_in must be at least " + std::to_string(kMinTraceLength));
    if (replicates < 1) v.push_back("replicates must be at least 1");
    if (samplers.empty()) v.push_back("samplers must not be empty");
  }
  if (experiment != ExperimentKind::Verify && points.empty()) v.push_back("points must not be empty");
  switch (experiment) {
    case ExperimentKind::Verify:
      if (instances < 0) v.push_back("instances must be non-negative");
      break;
    case ExperimentKind::IsingMuSweep:
      if (eta < 1) v.push_back("eta must be at least 1");
      if (coupling < 0.0) v.push_back("coupling must be non-negative");
      for (double p : points)
        if (!std::isfinite(p)) v.push_back("mu values must be finite");
      break;
    case ExperimentKind::IsingEtaSweep:
      if (coupling < 0.0) v.push_back("coupling must be non-negative");
      if (!std::isfinite(mu)) v.push_back("mu must be finite");
      for (double p : points)
        if (!(p >= 1.0) || p != std::floor(p) || p > 1000.0)
          v.push_back("eta values must be integers in [1, 1000], got " + fmt(p, "%g"));
      break;
    case ExperimentKind::BarkerTable:
    case ExperimentKind::GuidedWalk:
      for (double p : points)
        if (!(p > 0.0) || !std::isfinite(p)) v.push_back("sigma values must be positive, got " + fmt(p, "%g"));
      break;
    case ExperimentKind::Counterexample:
      if (!(sigma > 0.0 && sigma < 1.0) || !(1.0 / (sigma * sigma) - sigma * sigma - 1.0 > 0.0))
        v.push_back("sigma must lie in (0, 1) with 1/sigma^2 - sigma^2 - 1 > 0");
      for (double p : points)
        if (!(p >= 0.0) || !std::isfinite(p)) v.push_back("k values must be non-negative");
      break;
  }
  return v;
}

void ExperimentConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(v);
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration:";
  for (const auto& p : problems) s += "\n  - " + p;
  return s;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::invalid_argument(join_problems(problems)), problems_(problems) {}

// ---------------------------------------------------------------------------
// Scheduling

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LIFTED_MCMC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t point, Sampler sampler,
                             int replicate) {
  return derive_seed(master, {static_cast<std::uint64_t>(point),
                              static_cast<std::uint64_t>(static_cast<int>(sampler)),
                              static_cast<std::uint64_t>(replicate)});
}

// ---------------------------------------------------------------------------
// Chains

namespace {

struct IsingPoint {
  int eta;
  double mu;
};

IsingPoint ising_point(const ExperimentConfig& cfg, std::size_t p) {
  if (cfg.experiment == ExperimentKind::IsingEtaSweep)
    return {static_cast<int>(cfg.points.at(p)), cfg.mu};
  return {cfg.eta, cfg.points.at(p)};
}

// The noise in the field is drawn once per (seed, eta) and shared by every
// sampler, replicate and mu value.
std::shared_ptr<const ising::IsingModel> ising_model(const ExperimentConfig& cfg, IsingPoint pt) {
  Rng field_rng(derive_seed(cfg.seed, {kFieldStream, static_cast<std::uint64_t>(pt.eta)}));
  ising::IsingParams params{pt.eta, cfg.coupling, ising::generate_external_field(pt.eta, pt.mu, field_rng)};
  return std::make_shared<const ising::IsingModel>(std::move(params));
}

template <class Proposal, class F>
ChainTrace collect(Sampler sampler, const Proposal& proposal, typename Proposal::State start,
                   long iterations, long burn_in, Rng& rng, F&& f) {
  ChainTrace trace;
  trace.burn_in = burn_in;
  trace.total_steps = iterations - burn_in;
  trace.values.reserve(static_cast<std::size_t>(trace.total_steps));
  run_chain(sampler, proposal, BalancingFunction::metropolis(), std::move(start), iterations,
            burn_in, rng, std::forward<F>(f), [&](double v, bool accepted) {
              trace.values.push_back(v);
              trace.accepted_count += accepted ? 1 : 0;
            });
  return trace;
}

}  // namespace

StandardizationMoments magnetisation_moments(const ExperimentConfig& cfg, std::size_t point_index) {
  const IsingPoint pt = ising_point(cfg, point_index);
  auto model = ising_model(cfg, pt);
  if (pt.eta <= ising::kMaxEnumerationEta) {
    const auto pi = ising::enumerate_target(model->params());
    const auto m = ising::magnetisation_vector(model->sites());
    const double mean = pi.dot(m);
    return {mean, std::sqrt(exact::variance_under(pi, m)), true};
  }
  Rng rng(derive_seed(cfg.seed, {kPilotStream, point_index}));
  auto start = ising::SpinLattice::random(model, rng);
  auto trace = collect(Sampler::MH, ising::IsingProposal{}, std::move(start), kPilotIterations,
                       kPilotBurnIn, rng,
                       [](const ising::SpinLattice& x) { return static_cast<double>(x.magnetisation()); });
  const double mean = std::accumulate(trace.values.begin(), trace.values.end(), 0.0) /
                      static_cast<double>(trace.values.size());
  double ss = 0.0;
  for (double v : trace.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(trace.values.size() - 1));
  if (!(sd > 0.0)) throw std::runtime_error("pilot run produced a constant magnetisation");
  return {mean, sd, false};
}

ChainTrace ising_replicate(const ExperimentConfig& cfg, std::size_t point_index, Sampler sampler,
                           int replicate, const StandardizationMoments& moments) {
  auto model = ising_model(cfg, ising_point(cfg, point_index));
  Rng rng(replicate_seed(cfg.seed, point_index, sampler, replicate));
  auto start = ising::SpinLattice::random(model, rng);
  const double mean = moments.mean, sd = moments.sd;
  return collect(sampler, ising::IsingProposal{}, std::move(start), cfg.iterations,
                 cfg.effective_burn_in(), rng, [=](const ising::SpinLattice& x) {
                   return (static_cast<double>(x.magnetisation()) - mean) / sd;
                 });
}

ChainTrace barker_replicate(const ExperimentConfig& cfg, std::size_t point_index, Sampler sampler,
                            int replicate) {
  const barker1d::BarkerProposal1D proposal(cfg.points.at(point_index),
                                            barker1d::Target1D::standard_normal());
  Rng rng(replicate_seed(cfg.seed, point_index, sampler, replicate));
  auto start = proposal.make_state(rng.normal());
  return collect(sampler, proposal, start, cfg.iterations, cfg.effective_burn_in(), rng,
                 [](const barker1d::BarkerPoint& p) { return p.x; });
}

ChainTrace guided_walk_replicate(const ExperimentConfig& cfg, std::size_t point_index,
                                 Sampler sampler, int replicate) {
  const barker1d::GuidedWalkProposal proposal(cfg.points.at(point_index),
                                              barker1d::Target1D::standard_normal());
  Rng rng(replicate_seed(cfg.seed, point_index, sampler, replicate));
  const double start = rng.normal();
  return collect(sampler, proposal, start, cfg.iterations, cfg.effective_burn_in(), rng,
                 [](double x) { return x; });
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.is_sampling())
    throw std::invalid_argument("run_experiment handles sampling experiments only");
  const bool ising = cfg.experiment == ExperimentKind::IsingMuSweep ||
                     cfg.experiment == ExperimentKind::IsingEtaSweep;
  const std::size_t P = cfg.points.size(), S = cfg.samplers.size();
  const std::size_t R = static_cast<std::size_t>(cfg.replicates);
  const unsigned threads = resolve_threads(cfg.threads);

  std::vector<StandardizationMoments> moments(P);
  if (ising) parallel_for(P, threads, [&](std::size_t p) { moments[p] = magnetisation_moments(cfg, p); });

  ExperimentResult result;
  result.config = cfg;
  result.replicates.resize(P * S * R);
  parallel_for(P * S * R, threads, [&](std::size_t task) {
    const std::size_t p = task / (S * R), s = (task / R) % S;
    const int r = static_cast<int>(task % R);
    const Sampler sampler = cfg.samplers[s];
    ChainTrace trace;
    if (ising)
      trace = ising_replicate(cfg, p, sampler, r, moments[p]);
    else if (cfg.experiment == ExperimentKind::BarkerTable)
      trace = barker_replicate(cfg, p, sampler, r);
    else
      trace = guided_walk_replicate(cfg, p, sampler, r);
    result.replicates[task] = {cfg.points[p], sampler, r, acceptance_rate(trace),
                               batch_means_variance(trace)};
  });

  const auto mh = std::find(cfg.samplers.begin(), cfg.samplers.end(), Sampler::MH);
  for (std::size_t p = 0; p < P; ++p) {
    std::optional<double> bound_mean, bound_median;
    for (std::size_t s = 0; s < S; ++s) {
      std::vector<double> acc, var;
      for (std::size_t r = 0; r < R; ++r) {
        const auto& rr = result.replicates[(p * S + s) * R + r];
        acc.push_back(rr.acc_rate);
        var.push_back(rr.variance.value);
      }
      PointSummary sm;
      sm.point = cfg.points[p];
      sm.sampler = cfg.samplers[s];
      sm.acc_mean = mean(acc);
      sm.acc_median = median(acc);
      sm.var_mean = mean(var);
      sm.var_median = median(var);
      if (R > 1) {
        double ss = 0.0;
        for (double v : var) ss += (v - sm.var_mean) * (v - sm.var_mean);
        sm.var_mean_se = std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R));
      }
      result.summaries.push_back(sm);
    }
    if (has_bound_column(cfg.experiment) && mh != cfg.samplers.end()) {
      const auto& m = result.summaries[p * S + static_cast<std::size_t>(mh - cfg.samplers.begin())];
      bound_mean = 2.0 * m.var_mean + 1.0;
      bound_median = 2.0 * m.var_median + 1.0;
      for (std::size_t s = 0; s < S; ++s) {
        result.summaries[p * S + s].bound_mean = bound_mean;
        result.summaries[p * S + s].bound_median = bound_median;
      }
    }
  }
  return result;
}

const PointSummary& ExperimentResult::summary(double point, Sampler sampler) const {
  for (const auto& s : summaries)
    if (std::abs(s.point - point) < 1e-12 && s.sampler == sampler) return s;
  throw std::out_of_range("no summary for point " + fmt(point, "%g") + " and sampler " +
                          to_string(sampler));
}

void ExperimentResult::write_csv(std::ostream& out) const {
  const auto& cfg = config;
  const std::string name = to_string(cfg.experiment);
  const std::size_t S = cfg.samplers.size(), R = static_cast<std::size_t>(cfg.replicates);
  const auto mh = std::find(cfg.samplers.begin(), cfg.samplers.end(), Sampler::MH);
  const bool bounds = has_bound_column(cfg.experiment) && mh != cfg.samplers.end();
  const std::size_t mh_index = static_cast<std::size_t>(mh - cfg.samplers.begin());

  out << kCsvHeader << '\n';
  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    const std::string point = fmt(cfg.points[p], "%g");
    for (std::size_t s = 0; s < S; ++s) {
      const std::string sampler = to_string(cfg.samplers[s]);
      for (std::size_t r = 0; r < R; ++r) {
        const auto& rr = replicates[(p * S + s) * R + r];
        out << name << ',' << point << ',' << sampler << ',' << r << ',' << fmt(rr.acc_rate) << ','
            << fmt(rr.variance.value) << ',' << fmt(rr.variance.standard_error) << ',';
        if (bounds) out << fmt(2.0 * replicates[(p * S + mh_index) * R + r].variance.value + 1.0);
        out << '\n';
      }
    }
    for (std::size_t s = 0; s < S; ++s) {
      const auto& sm = summaries[p * S + s];
      const std::string sampler = to_string(cfg.samplers[s]);
      out << name << ',' << point << ',' << sampler << ",mean," << fmt(sm.acc_mean) << ','
          << fmt(sm.var_mean) << ',' << fmt(sm.var_mean_se) << ','
          << (sm.bound_mean ? fmt(*sm.bound_mean) : "") << '\n';
      out << name << ',' << point << ',' << sampler << ",median," << fmt(sm.acc_median) << ','
          << fmt(sm.var_median) << ",," << (sm.bound_median ? fmt(*sm.bound_median) : "") << '\n';
    }
  }
}

void ExperimentResult::print_summary(std::ostream& out) const {
  out << to_string(config.experiment) << ": " << config.replicates << " replicates x "
      << config.iterations << " iterations (burn-in " << config.effective_burn_in() << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "%8s  %-7s %9s %11s %11s %9s %9s\n", "point", "sampler", "acc",
                "var(mean)", "var(median)", "se", "bound");
  out << line;
  for (const auto& s : summaries) {
    std::snprintf(line, sizeof line, "%8g  %-7s %8.1f%% %11.4f %11.4f %9.4f %9s\n", s.point,
                  to_string(s.sampler).c_str(), 100.0 * s.acc_mean, s.var_mean, s.var_median,
                  s.var_mean_se, s.bound_mean ? fmt(*s.bound_mean, "%.3f").c_str() : "-");
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Verification

InstanceCertificate certify_instance(const exact::FiniteInstance& inst,
                                     const std::vector<exact::Vector>& functionals,
                                     std::string label, bool inject_fault) {
  using namespace exact;
  InstanceCertificate c;
  c.label = std::move(label);
  c.states = inst.n;
  auto fail = [&](const std::string& certificate, const std::string& detail) {
    c.failures.push_back(c.label + ": " + certificate + " " + detail);
  };

  KernelTriple k = build_kernels(inst, BalancingFunction::metropolis());
  if (inject_fault) {
    // Shift mass between two entries of the first row; the row still sums to 1.
    const Eigen::Index n = k.lifted.m.cols();
    const Eigen::Index to = k.lifted.m(0, 1) < 1.0 - 1e-3 ? 1 : n - 1;
    k.lifted.m(0, to) += 1e-3;
    k.lifted.m.row(0) /= k.lifted.m.row(0).sum();
  }

  c.row_sum = std::max({row_sum_residual(k.mh), row_sum_residual(k.rev), row_sum_residual(k.lifted)});
  c.stationarity = std::max({stationarity_residual(k.mh, inst.pi), stationarity_residual(k.rev, inst.pi),
                             stationarity_residual(k.lifted, inst.pi)});
  c.detailed_balance =
      std::max(detailed_balance_residual(k.mh, inst.pi), detailed_balance_residual(k.rev, inst.pi));
  c.skewed_db = skewed_db_residual(k.lifted, inst.pi);
  const auto margin = peskun_bound_margin(k.rev, k.mh);
  c.peskun_margin = margin.margin;
  c.peskun_relative_margin = margin.relative_margin;

  if (c.row_sum > 1e-12) fail("row_sums", "residual " + fmt(c.row_sum, "%.3e"));
  if (c.stationarity > kResidualTolerance) fail("stationarity", "residual " + fmt(c.stationarity, "%.3e"));
  if (c.detailed_balance > kResidualTolerance)
    fail("detailed_balance", "residual " + fmt(c.detailed_balance, "%.3e"));
  if (c.skewed_db > kResidualTolerance) fail("skewed_detailed_balance", "residual " + fmt(c.skewed_db, "%.3e"));
  if (c.peskun_margin < -kPeskunTolerance) fail("peskun_bound", "margin " + fmt(c.peskun_margin, "%.3e"));

  const auto reports = theorem1_certificates(k, inst.pi, functionals);
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (!reports[i].holds()) {
      ++c.theorem1_violations;
      fail("theorem1", "functional " + std::to_string(i) + ": lifted " + fmt(reports[i].var_lifted) +
                           ", rev " + fmt(reports[i].var_rev) + ", mh " + fmt(reports[i].var_mh));
    }

  const DenseKernel* kernels[] = {&k.mh, &k.rev, &k.lifted};
  const char* names[] = {"mh", "rev", "lifted"};
  for (int which = 0; which < 3; ++which) {
    const DenseKernel& p = *kernels[which];
    std::vector<double> limit(functionals.size());
    for (std::size_t i = 0; i < functionals.size(); ++i)
      limit[i] = which == 0 ? reports[i].var_mh : which == 1 ? reports[i].var_rev : reports[i].var_lifted;
    std::vector<std::vector<double>> gaps;
    for (double lambda : kLambdaGrid) {
      const auto v = lambda_variances(p, inst.pi, functionals, lambda);
      std::vector<double> g(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) g[i] = std::abs(v[i] - limit[i]);
      gaps.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < functionals.size(); ++i) {
      const double rel = gaps.back()[i] / (1.0 + limit[i]);
      c.worst_lambda_gap = std::max(c.worst_lambda_gap, rel);
      if (rel > kLambdaGapTolerance)
        fail("lambda_limit", std::string(names[which]) + " functional " + std::to_string(i) +
                                 " gap " + fmt(gaps.back()[i], "%.3e"));
      if (which < 2)
        for (std::size_t l = 1; l < gaps.size(); ++l)
          if (gaps[l][i] > gaps[l - 1][i] + 1e-12) {
            ++c.lambda_monotone_violations;
            fail("lambda_monotone", std::string(names[which]) + " functional " + std::to_string(i) +
                                        " at lambda " + fmt(kLambdaGrid[l], "%g"));
            break;
          }
    }
  }
  return c;
}

namespace {

struct VerifyJob {
  std::string label;
  exact::FiniteInstance inst;
  std::vector<exact::Vector> functionals;
};

}  // namespace

VerificationReport run_verification(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<VerifyJob> jobs;
  for (int i = 0; i < cfg.instances; ++i) {
    Rng rng(derive_seed(cfg.seed, {kVerifyStream, static_cast<std::uint64_t>(i)}));
    auto inst = exact::random_instance(rng);
    auto fs = exact::test_functionals(inst.pi, rng, 5);
    jobs.push_back({"random[" + std::to_string(i) + "]", std::move(inst), std::move(fs)});
  }
  const double mus[] = {0.0, 1.0, 3.0};
  for (int eta = 1; eta <= 3; ++eta)
    for (int m = 0; m < 3; ++m) {
      Rng rng(derive_seed(cfg.seed, {kVerifyStream + 1, static_cast<std::uint64_t>(eta),
                                     static_cast<std::uint64_t>(m)}));
      ising::IsingParams params{eta, 0.5, ising::generate_external_field(eta, mus[m], rng)};
      auto inst = ising::finite_instance(params);
      std::vector<exact::Vector> fs{
          exact::standardize_under(inst.pi, ising::magnetisation_vector(params.sites()))};
      for (auto& f : exact::test_functionals(inst.pi, rng, 4)) fs.push_back(std::move(f));
      jobs.push_back({"ising[eta=" + std::to_string(eta) + ",mu=" + fmt(mus[m], "%g") + "]",
                      std::move(inst), std::move(fs)});
    }

  std::vector<InstanceCertificate> certs(jobs.size());
  parallel_for(jobs.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    certs[i] = certify_instance(jobs[i].inst, jobs[i].functionals, jobs[i].label,
                                cfg.inject_fault && i == 0);
  });

  VerificationReport r;
  r.instances = static_cast<int>(certs.size());
  r.worst_peskun_margin = std::numeric_limits<double>::infinity();
  r.worst_peskun_relative_margin = std::numeric_limits<double>::infinity();
  for (const auto& c : certs) {
    r.worst_stationarity = std::max(r.worst_stationarity, c.stationarity);
    r.worst_detailed_balance = std::max(r.worst_detailed_balance, c.detailed_balance);
    r.worst_skewed_db = std::max(r.worst_skewed_db, c.skewed_db);
    r.worst_row_sum = std::max(r.worst_row_sum, c.row_sum);
    r.worst_peskun_margin = std::min(r.worst_peskun_margin, c.peskun_margin);
    r.worst_peskun_relative_margin = std::min(r.worst_peskun_relative_margin, c.peskun_relative_margin);
    r.theorem1_violations += c.theorem1_violations;
    r.worst_lambda_gap = std::max(r.worst_lambda_gap, c.worst_lambda_gap);
    r.lambda_monotone_violations += c.lambda_monotone_violations;
    r.failures.insert(r.failures.end(), c.failures.begin(), c.failures.end());
  }
  if (certs.empty()) r.worst_peskun_margin = r.worst_peskun_relative_margin = 0.0;
  r.details = std::move(certs);
  return r;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["instances"] = instances;
  j["worst_stationarity"] = worst_stationarity;
  j["worst_skewed_db"] = worst_skewed_db;
  j["worst_peskun_margin"] = worst_peskun_margin;
  j["theorem1_violations"] = theorem1_violations;
  j["worst_detailed_balance"] = worst_detailed_balance;
  j["worst_row_sum"] = worst_row_sum;
  j["worst_peskun_relative_margin"] = worst_peskun_relative_margin;
  j["worst_lambda_gap"] = worst_lambda_gap;
  j["lambda_monotone_violations"] = lambda_monotone_violations;
  j["failures"] = failures;
  j["passed"] = passed();
  return j;
}

// ---------------------------------------------------------------------------

std::vector<CounterexampleRow> run_counterexample(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<CounterexampleRow> rows;
  for (double k : cfg.points) {
    const auto probe = barker1d::counterexample_probe(cfg.sigma, k);
    rows.push_back({k, probe.p_rev, probe.p_mh, probe.ratio()});
  }
  return rows;
}

}  // namespace lifted
