#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "otafl/bound.hpp"
#include "otafl/config.hpp"
#include "otafl/design.hpp"
#include "otafl/model.hpp"
#include "otafl/wireless.hpp"

namespace otafl::harness {

// Concurrent uploads make every round cost d/B seconds on the clock.
std::size_t rounds_from_budget(double budget_ms, double bandwidth_hz,
                               std::size_t dim);

// Everything shared across policies and replicates of one experiment:
// data, deployment, the centralized minimizer, and the estimated
// constants. Building this is the expensive one-off step.
struct ExperimentContext {
  model::LossConfig loss_cfg;
  std::vector<model::DeviceDataset> datasets;
  std::vector<model::LabeledExample> test_set;
  wireless::Deployment deployment;
  std::size_t dim = 0;
  std::size_t rounds = 0;
  double energy_per_sample = 0.0;
  double noise_psd = 0.0;
  model::ParamVector w0;
  model::ParamVector w_star;
  double f_star = 0.0;
  double accuracy_star = 0.0;
  double g_max = 0.0;
  double kappa = 0.0;
  std::vector<double> smoothness;  // per device L_m
  double mean_smoothness = 0.0;

  // 2 / (mu~ + L~) for the weights of a pre-scaler set (uniform when the
  // policy has none)
  double stepsize_limit(const ota::PreScalerSet* set) const;
};

ExperimentContext prepare_context(const ExperimentConfig& cfg);

struct RoundRecord {
  std::size_t round = 0;  // 0 is the initial point
  double elapsed_ms = 0.0;
  double loss = 0.0;
  double normalized_accuracy = 0.0;
  double dist_to_opt = 0.0;
};

struct RunResult {
  std::uint64_t replicate = 0;
  std::vector<RoundRecord> trace;
  std::vector<double> transmit_frequency;   // per device
  std::vector<double> participation_level;  // per device, gamma-weighted
  double final_loss = 0.0;
  double final_normalized_accuracy = 0.0;
  std::size_t skipped_rounds = 0;
  bool diverged = false;
};

struct RunOptions {
  double eta = 0.0;
  std::uint64_t replicate = 0;
  bool log_loss = true;
  bool log_accuracy = true;
  // stop early and flag the run once the loss exceeds 1e3 x its initial
  // value (grid-search filter)
  bool stop_on_divergence = false;
  // when set, every round appends a JSON line with the round index, the
  // transmit indicators and the estimate norm
  std::ostream* trace_out = nullptr;
  // dist_to_opt in the trace measures the distance to this point; defaults
  // to the global minimizer w*
  const model::ParamVector* distance_reference = nullptr;
};

// One replicate under one policy. Fading and noise streams depend only on
// (seed, replicate), never on the policy, so different policies consume
// common random numbers.
RunResult run_replicate(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                        design::RoundPolicy& policy, const RunOptions& options);

struct PolicyRun {
  std::string policy;
  design::PolicySpec spec;
  double eta = 0.0;
  std::vector<double> time_ms;  // shared logging grid
  std::vector<double> loss_mean, loss_stderr;
  std::vector<double> accuracy_mean, accuracy_stderr;
  std::vector<double> rms_dist_to_opt;  // sqrt(mean ||w_t - w*||^2)
  std::vector<double> participation_level;   // per device, mean over replicates
  std::vector<double> transmit_frequency;    // per device, mean over replicates
  std::vector<double> participation_per_run; // flattened [replicate][device]
  double final_loss_mean = 0.0;
  double final_loss_stderr = 0.0;
  double final_accuracy_mean = 0.0;
  std::size_t replicates = 0;
  std::size_t skipped_rounds = 0;
};

PolicyRun run_policy(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                     const design::PolicySpec& spec, double eta, int replicates,
                     bool log_accuracy = true);

struct GridSearchResult {
  double best_eta = 0.0;
  std::vector<double> grid;
  std::vector<double> mean_final_loss;  // +inf for diverged grid points
};

// Log-spaced default grid on (0, 2/(mu~+L~)]; explicit grids are clipped
// to the admissible range for the two statistical-CSI designs only.
std::vector<double> default_eta_grid(const ExperimentContext& ctx,
                                     const design::PolicySpec& spec,
                                     std::size_t points = 10);

GridSearchResult grid_search_stepsize(const ExperimentContext& ctx,
                                      const ExperimentConfig& cfg,
                                      const design::PolicySpec& spec,
                                      std::vector<double> grid);

struct ComparisonReport {
  std::vector<PolicyRun> policies;
  // time_to_target[a][b]: first logged time policy a's mean loss reaches
  // policy b's final mean loss (NaN if never)
  std::vector<std::vector<double>> time_to_target_ms;
};

ComparisonReport compare_policies(const ExperimentContext& ctx,
                                  const ExperimentConfig& cfg,
                                  const std::vector<design::PolicySpec>& specs);

// first logged time at which the mean loss drops to target (NaN if never)
double time_to_reach(const PolicyRun& run, double target_loss);

// Constants for the convergence bound, estimated from the context. When
// solve_w_tilde is set the weighted minimizer is solved for the exact
// initial error; otherwise the triangle-inequality fallback
// sqrt(E~_0) <= sqrt(E_0) + bias bound is used.
bound::BoundConstants assemble_constants(const ExperimentContext& ctx,
                                         const ota::PreScalerSet& set, double eta,
                                         bool solve_w_tilde,
                                         double minimizer_tol = 1e-8);

// ---- output files -------------------------------------------------------

void write_curves_csv(const std::string& path,
                      const std::vector<PolicyRun>& runs, bool accuracy);
void write_participation_csv(const std::string& path,
                             const ExperimentContext& ctx,
                             const std::vector<PolicyRun>& runs);
void write_bound_csv(const std::string& path,
                     const bound::BoundConstants& constants,
                     const ota::PreScalerSet& set, std::size_t rounds,
                     double round_ms, std::size_t log_every,
                     const std::vector<double>* empirical_rms = nullptr);
nlohmann::json summary_json(const ExperimentContext& ctx,
                            const ExperimentConfig& cfg,
                            const ComparisonReport& report);

}  // namespace otafl::harness
