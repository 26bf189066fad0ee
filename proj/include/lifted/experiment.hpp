#pragma once

// Experiment configuration, replicate scheduling and result reporting shared
// by the command-line tool and the acceptance suite.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifted/exact.hpp"
#include "lifted/kernels.hpp"
#include "lifted/variance.hpp"

namespace lifted {

enum class ExperimentKind { Verify, IsingEtaSweep, IsingMuSweep, BarkerTable, GuidedWalk, Counterexample };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::BarkerTable;
  std::vector<Sampler> samplers{Sampler::MH, Sampler::Rev, Sampler::Lifted};
  /// Swept parameter: mu (ising_mu_sweep), eta (ising_eta_sweep), sigma
  /// (barker_table, guided_walk) or k (counterexample).
  std::vector<double> points;
  int eta = 10;
  double coupling = 0.5;
  double mu = 1.0;
  double sigma = 0.5;  // counterexample only
  long iterations = 200000;
  long burn_in = -1;  // negative: 10% of iterations
  int replicates = 20;
  std::uint64_t seed = 20240601;
  std::string output_path;
  unsigned threads = 0;  // 0: LIFTED_MCMC_THREADS or hardware concurrency
  // verify
  int instances = 200;
  bool inject_fault = false;

  /// Paper-scale grids shrunk to desk scale.
  static ExperimentConfig defaults(ExperimentKind kind);
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  long effective_burn_in() const { return burn_in < 0 ? iterations / 10 : burn_in; }
  bool is_sampling() const;

  /// Every violated constraint, empty when the configuration is valid.
  std::vector<std::string> violations() const;
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::vector<std::string>& problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Worker count: explicit request, else LIFTED_MCMC_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

/// Runs fn(0..count-1) on `threads` workers; the first exception is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Seed of replicate r of sampler s at point p: derive_seed(master, {p, s, r}).
std::uint64_t replicate_seed(std::uint64_t master, std::size_t point, Sampler sampler, int replicate);

struct ReplicateResult {
  double point = 0.0;
  Sampler sampler = Sampler::MH;
  int replicate = 0;
  double acc_rate = 0.0;
  VarianceEstimate variance;
};

struct PointSummary {
  double point = 0.0;
  Sampler sampler = Sampler::MH;
  double acc_mean = 0.0;
  double acc_median = 0.0;
  double var_mean = 0.0;
  double var_median = 0.0;
  /// Standard deviation of the replicate estimates divided by sqrt(replicates).
  double var_mean_se = 0.0;
  std::optional<double> bound_mean;    // 2 var_mh + 1 from the MH mean
  std::optional<double> bound_median;  // same from the MH median
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicateResult> replicates;
  std::vector<PointSummary> summaries;

  const PointSummary& summary(double point, Sampler sampler) const;
  void write_csv(std::ostream& out) const;
  void print_summary(std::ostream& out) const;
};

inline constexpr const char* kCsvHeader =
    "experiment,point,sampler,replicate,acc_rate,asym_var,std_err,bound";

struct StandardizationMoments {
  double mean = 0.0;
  double sd = 1.0;
  bool exact = false;
};
/// Mean and sd of the magnetisation: exact for eta <= 3, otherwise from a
/// pilot MH run of 10^5 iterations with burn-in 10^4.
StandardizationMoments magnetisation_moments(const ExperimentConfig& cfg, std::size_t point_index);

/// One chain of a sampling experiment reduced to its trace.
ChainTrace ising_replicate(const ExperimentConfig& cfg, std::size_t point_index, Sampler sampler,
                           int replicate, const StandardizationMoments& moments);
ChainTrace barker_replicate(const ExperimentConfig& cfg, std::size_t point_index, Sampler sampler,
                            int replicate);
ChainTrace guided_walk_replicate(const ExperimentConfig& cfg, std::size_t point_index,
                                 Sampler sampler, int replicate);

/// Runs a sampling experiment (Ising sweeps, Barker table, guided walk).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Exact verification

struct InstanceCertificate {
  std::string label;
  std::size_t states = 0;
  double stationarity = 0.0;       // worst over the three kernels
  double detailed_balance = 0.0;   // worst over MH and reversible
  double skewed_db = 0.0;
  double row_sum = 0.0;
  double peskun_margin = 0.0;
  double peskun_relative_margin = 0.0;
  int theorem1_violations = 0;
  double worst_lambda_gap = 0.0;   // max over kernels and functionals of gap / (1 + var)
  int lambda_monotone_violations = 0;
  std::vector<std::string> failures;
};

struct VerificationReport {
  int instances = 0;
  double worst_stationarity = 0.0;
  double worst_detailed_balance = 0.0;
  double worst_skewed_db = 0.0;
  double worst_row_sum = 0.0;
  double worst_peskun_margin = 0.0;
  double worst_peskun_relative_margin = 0.0;
  int theorem1_violations = 0;
  double worst_lambda_gap = 0.0;
  int lambda_monotone_violations = 0;
  std::vector<std::string> failures;
  std::vector<InstanceCertificate> details;  // not serialized

  bool passed() const { return failures.empty(); }
  nlohmann::json to_json() const;
};

inline constexpr double kResidualTolerance = 1e-10;
inline constexpr double kPeskunTolerance = 1e-12;
inline constexpr double kLambdaGapTolerance = 0.05;
inline constexpr double kLambdaGrid[] = {0.9, 0.99, 0.999, 0.9999};

/// All certificates for one instance and its functionals. With `inject_fault`
/// one entry of the lifted kernel is perturbed and its row renormalized.
InstanceCertificate certify_instance(const exact::FiniteInstance& inst,
                                     const std::vector<exact::Vector>& functionals,
                                     std::string label, bool inject_fault = false);

/// Random instances (4-12 states) plus the eta in {1,2,3}, mu in {0,1,3} Ising
/// enumerations, each certified with five standardized functionals.
VerificationReport run_verification(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct CounterexampleRow {
  double k = 0.0;
  double p_rev = 0.0;
  double p_mh = 0.0;
  double ratio = 0.0;
};
std::vector<CounterexampleRow> run_counterexample(const ExperimentConfig& cfg);

}  // namespace lifted
