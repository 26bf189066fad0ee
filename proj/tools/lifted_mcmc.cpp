// Command-line entry point: exact verification, sampling experiments and the
// two-kernel counterexample.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lifted/experiment.hpp"

namespace {

using lifted::ExperimentConfig;
using lifted::ExperimentKind;

struct Overrides {
  std::string config_path;
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  std::optional<long> burn_in;
  std::optional<int> replicates;
  std::optional<std::string> output;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--output", o.output, "output path");
  cmd->add_option("--threads", o.threads, "worker threads (default: LIFTED_MCMC_THREADS or all cores)");
}

ExperimentConfig load(const Overrides& o, ExperimentKind fallback) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw lifted::ConfigError({std::string("cannot parse ") + o.config_path + ": " + e.what()});
    }
    if (!o.experiment.empty()) j["experiment"] = o.experiment;
    if (!j.contains("experiment")) j["experiment"] = lifted::to_string(fallback);
    cfg = ExperimentConfig::from_json(j);
  } else {
    cfg = ExperimentConfig::defaults(o.experiment.empty() ? fallback
                                                          : lifted::parse_experiment(o.experiment));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) {
    cfg.iterations = *o.iterations;
    if (!o.burn_in && o.config_path.empty()) cfg.burn_in = -1;
  }
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.replicates) cfg.replicates = *o.replicates;
  if (o.output) cfg.output_path = *o.output;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file " + path);
  return out;
}

int cmd_verify(const ExperimentConfig& cfg) {
  const auto report = lifted::run_verification(cfg);
  const std::string text = report.to_json().dump(2) + "\n";
  if (!cfg.output_path.empty()) {
    auto out = open_output(cfg.output_path);
    out << text;
  } else {
    std::cout << text;
  }
  std::fprintf(stderr, "verify: %d instances, worst stationarity %.3e, worst skewed DB %.3e, "
               "worst Peskun margin %.3e, %d variance-chain violations\n",
               report.instances, report.worst_stationarity, report.worst_skewed_db,
               report.worst_peskun_margin, report.theorem1_violations);
  for (const auto& f : report.failures) std::fprintf(stderr, "FAILED %s\n", f.c_str());
  return report.passed() ? 0 : 1;
}

int cmd_run(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::Verify) return cmd_verify(cfg);
  if (cfg.experiment == ExperimentKind::Counterexample) {
    const auto rows = lifted::run_counterexample(cfg);
    std::printf("%6s %14s %14s %14s\n", "k", "P_rev(0,B_k)", "P_MH(0,B_k)", "ratio");
    for (const auto& r : rows) std::printf("%6g %14.6e %14.6e %14.6e\n", r.k, r.p_rev, r.p_mh, r.ratio);
    if (!cfg.output_path.empty()) {
      auto out = open_output(cfg.output_path);
      out << "k,p_rev,p_mh,ratio\n";
      char line[128];
      for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%g,%.10e,%.10e,%.10e\n", r.k, r.p_rev, r.p_mh, r.ratio);
        out << line;
      }
    }
    return 0;
  }
  // Fail on an unwritable path before spending time on the chains.
  std::optional<std::ofstream> out;
  if (!cfg.output_path.empty()) out.emplace(open_output(cfg.output_path));
  const auto result = lifted::run_experiment(cfg);
  if (out)
    result.write_csv(*out);
  else
    result.write_csv(std::cout);
  result.print_summary(out ? std::cout : std::cerr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metropolis-Hastings, reversible directional and lifted samplers"};
  app.require_subcommand(1);

  Overrides verify_opts, run_opts, cx_opts;
  int instances = -1;
  bool inject_fault = false;
  auto* verify = app.add_subcommand("verify", "exact certificates on random finite instances");
  add_common(verify, verify_opts);
  verify->add_option("--instances", instances, "number of random instances");
  verify->add_flag("--inject-fault", inject_fault, "corrupt one lifted kernel entry");

  auto* run = app.add_subcommand("run", "run a sampling experiment and write CSV");
  add_common(run, run_opts);
  run->add_option("--experiment", run_opts.experiment,
                  "ising_mu_sweep, ising_eta_sweep, barker_table, guided_walk, counterexample or verify");
  run->add_option("--iterations", run_opts.iterations, "iterations per chain, burn-in included");
  run->add_option("--burn-in", run_opts.burn_in, "discarded iterations (default 10%)");
  run->add_option("--replicates", run_opts.replicates, "independent chains per point and sampler");

  double sigma = 0.5;
  double k_max = 10.0;
  auto* cx = app.add_subcommand("counterexample", "two-kernel example without a Peskun ordering");
  add_common(cx, cx_opts);
  cx->add_option("--sigma", sigma, "scale of Q_{+1}; Q_{-1} uses 1/sigma");
  cx->add_option("--k-max", k_max, "largest k of the scan k = 0, 1, ...");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      auto cfg = load(verify_opts, ExperimentKind::Verify);
      cfg.experiment = ExperimentKind::Verify;
      if (instances >= 0) cfg.instances = instances;
      if (inject_fault) cfg.inject_fault = true;
      cfg.validate();
      return cmd_verify(cfg);
    }
    if (run->parsed()) {
      if (run_opts.config_path.empty() && run_opts.experiment.empty())
        throw lifted::ConfigError({"run needs --config or --experiment"});
      return cmd_run(load(run_opts, ExperimentKind::BarkerTable));
    }
    auto cfg = load(cx_opts, ExperimentKind::Counterexample);
    cfg.experiment = ExperimentKind::Counterexample;
    if (cx->count("--sigma")) cfg.sigma = sigma;
    if (cx->count("--k-max")) {
      cfg.points.clear();
      for (double k = 0.0; k <= k_max + 1e-9; k += 1.0) cfg.points.push_back(k);
    }
    cfg.validate();
    return cmd_run(cfg);
  } catch (const lifted::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
