#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "otafl/bound.hpp"
#include "otafl/config.hpp"
#include "otafl/design.hpp"
#include "otafl/harness.hpp"

namespace {

using namespace otafl;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<double> eta;
  std::optional<std::string> deployment_file;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (.json or .toml)")
      ->required();
  cmd->add_option("--seed", args.seed, "root seed override");
  cmd->add_option("--replicates", args.replicates, "replicate count override");
  cmd->add_option("--eta", args.eta, "fixed stepsize override (0 = grid search)");
  cmd->add_option("--deployment", args.deployment_file,
                  "pinned deployment JSON override");
  cmd->add_option("--out", args.out_dir, "output directory");
}

harness::ExperimentConfig load(const CommonArgs& args) {
  auto cfg = harness::load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.replicates) cfg.replicates = *args.replicates;
  if (args.eta) cfg.eta = *args.eta;
  if (args.deployment_file) cfg.deployment_file = *args.deployment_file;
  return cfg;
}

std::filesystem::path out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return std::filesystem::path(args.out_dir) / name;
}

nlohmann::json design_to_json(const std::string& policy,
                              const ota::PreScalerSet& set) {
  return {{"policy", policy},
          {"dim", set.dim},
          {"energy_per_sample", set.energy_per_sample},
          {"g_max", set.g_max},
          {"alpha", set.alpha},
          {"gamma", set.gamma},
          {"path_loss", set.path_loss},
          {"alpha_per_device", set.alpha_per_device},
          {"transmit_prob", set.transmit_prob},
          {"participation", set.participation}};
}

ota::PreScalerSet design_from_json(const nlohmann::json& j) {
  return ota::PreScalerSet::from_gammas(
      j.at("gamma").get<std::vector<double>>(),
      j.at("path_loss").get<std::vector<double>>(),
      j.at("dim").get<std::size_t>(), j.at("energy_per_sample").get<double>(),
      j.at("g_max").get<double>());
}

void print_design_table(const harness::ExperimentContext& ctx,
                        const ota::PreScalerSet& set) {
  std::printf("%-7s %10s %12s %12s %12s %10s %10s\n", "device", "dist_m",
              "pathloss_dB", "gamma", "alpha_m", "P_m", "p_m");
  for (std::size_t m = 0; m < set.size(); ++m) {
    std::printf("%-7zu %10.2f %12.2f %12.5e %12.5e %10.6f %10.6f\n", m,
                ctx.deployment.sites[m].distance_m,
                wireless::linear_to_db(set.path_loss[m]), set.gamma[m],
                set.alpha_per_device[m], set.transmit_prob[m],
                set.participation[m]);
  }
  std::printf("post-scaler alpha = %.6e\n", set.alpha);
}

int cmd_design(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto ctx = harness::prepare_context(cfg);
  auto policy = design::make_policy(cfg.policy, ctx.deployment, ctx.dim,
                                    ctx.energy_per_sample, ctx.g_max);
  const auto* set = policy->prescalers();
  if (set == nullptr)
    throw std::invalid_argument("policy '" + design::policy_name(cfg.policy.kind) +
                                "' has no design-time pre-scalers");
  print_design_table(ctx, *set);
  const auto j = design_to_json(design::policy_name(cfg.policy.kind), *set);
  std::ofstream out(out_path(args, "design.json"));
  out << j.dump(2) << "\n";
  ctx.deployment.save(out_path(args, "deployment.json").string());
  return 0;
}

int cmd_bound(const CommonArgs& args, const std::string& design_path,
              bool solve_w_tilde) {
  const auto cfg = load(args);
  const auto ctx = harness::prepare_context(cfg);

  ota::PreScalerSet set = [&] {
    if (!design_path.empty()) {
      std::ifstream in(design_path);
      if (!in) throw std::runtime_error("cannot open design file: " + design_path);
      nlohmann::json j;
      in >> j;
      return design_from_json(j);
    }
    auto policy = design::make_policy(cfg.policy, ctx.deployment, ctx.dim,
                                      ctx.energy_per_sample, ctx.g_max);
    if (policy->prescalers() == nullptr)
      throw std::invalid_argument("bound needs a policy with pre-scalers");
    return *policy->prescalers();
  }();

  double eta = cfg.eta;
  if (eta <= 0.0)
    throw std::invalid_argument("bound requires a fixed stepsize (--eta or config)");

  auto constants =
      harness::assemble_constants(ctx, set, eta, solve_w_tilde, cfg.minimizer_tol);
  constants.g_max = set.g_max;  // honor an externally supplied design
  const double round_ms = double(ctx.dim) / cfg.radio.bandwidth_hz * 1000.0;
  harness::write_bound_csv(out_path(args, "bound.csv").string(), constants, set,
                           ctx.rounds, round_ms, cfg.log_every);
  const auto b0 = bound::optimality_error_bound(0, constants, set);
  std::printf("constants: mu~=%.6g L~=%.6g kappa=%.6g G_max=%.6g alpha=%.6g\n",
              constants.mu_tilde, constants.l_tilde, constants.kappa,
              constants.g_max, set.alpha);
  std::printf("initial error sqrt(E~_0)=%.6g (%s), bias bound=%.6g\n",
              std::sqrt(constants.e0_tilde),
              constants.e0_tilde_solved ? "solved w~" : "triangle fallback",
              b0.model_bias);
  if (solve_w_tilde) {
    // bound-tightness: the actual distance between the two minimizers
    const auto w_tilde = model::solve_weighted_minimizer(
        ctx.datasets, set.participation, ctx.loss_cfg, cfg.minimizer_tol);
    double dist_sq = 0.0;
    for (std::size_t j = 0; j < ctx.dim; ++j) {
      const double diff = w_tilde.w[j] - ctx.w_star[j];
      dist_sq += diff * diff;
    }
    std::printf("true model bias ||w~ - w*|| = %.6g (bound %.6g)\n",
                std::sqrt(dist_sq), b0.model_bias);
  }
  std::printf("wrote %s\n", out_path(args, "bound.csv").string().c_str());
  return 0;
}

void write_all_outputs(const CommonArgs& args,
                       const harness::ExperimentContext& ctx,
                       const harness::ExperimentConfig& cfg,
                       const harness::ComparisonReport& report) {
  harness::write_curves_csv(out_path(args, "loss.csv").string(), report.policies,
                            false);
  harness::write_curves_csv(out_path(args, "accuracy.csv").string(),
                            report.policies, true);
  harness::write_participation_csv(out_path(args, "participation.csv").string(),
                                   ctx, report.policies);
  bool wrote_default = false;
  for (const auto& run : report.policies) {
    auto policy = design::make_policy(run.spec, ctx.deployment, ctx.dim,
                                      ctx.energy_per_sample, ctx.g_max);
    const auto* set = policy->prescalers();
    if (set == nullptr) continue;
    try {
      const auto constants = harness::assemble_constants(ctx, *set, run.eta,
                                                         /*solve_w_tilde=*/false);
      const double round_ms = double(ctx.dim) / cfg.radio.bandwidth_hz * 1000.0;
      const std::string name = wrote_default ? "bound_" + run.policy + ".csv"
                                             : "bound.csv";
      harness::write_bound_csv(out_path(args, name).string(), constants, *set,
                               ctx.rounds, round_ms, cfg.log_every);
      wrote_default = true;
    } catch (const std::invalid_argument& e) {
      std::cerr << "warning: skipping bound.csv for " << run.policy << ": "
                << e.what() << "\n";
    }
  }
  std::ofstream summary(out_path(args, "summary.json"));
  summary << harness::summary_json(ctx, cfg, report).dump(2) << "\n";
}

int cmd_run(const CommonArgs& args, const std::string& trace_path) {
  const auto cfg = load(args);
  const auto ctx = harness::prepare_context(cfg);
  harness::ComparisonReport report;
  double eta = cfg.eta;
  if (eta <= 0.0) {
    const auto grid = cfg.eta_grid.empty()
                          ? harness::default_eta_grid(ctx, cfg.policy)
                          : cfg.eta_grid;
    eta = harness::grid_search_stepsize(ctx, cfg, cfg.policy, grid).best_eta;
  }
  report.policies.push_back(
      harness::run_policy(ctx, cfg, cfg.policy, eta, cfg.replicates, true));
  report.time_to_target_ms = {{harness::time_to_reach(
      report.policies[0], report.policies[0].final_loss_mean)}};

  if (!trace_path.empty()) {
    // replicate 0 round-by-round JSONL trace
    const auto parent = std::filesystem::path(trace_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream trace(trace_path);
    if (!trace) throw std::runtime_error("cannot open trace file: " + trace_path);
    auto policy = design::make_policy(cfg.policy, ctx.deployment, ctx.dim,
                                      ctx.energy_per_sample, ctx.g_max);
    harness::RunOptions options;
    options.eta = eta;
    options.replicate = 0;
    options.trace_out = &trace;
    harness::run_replicate(ctx, cfg, *policy, options);
  }

  write_all_outputs(args, ctx, cfg, report);
  const auto& run = report.policies[0];
  std::printf("%s: eta=%.6g final loss=%.6g final normalized accuracy=%.4f\n",
              run.policy.c_str(), run.eta, run.final_loss_mean,
              run.final_accuracy_mean);
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto ctx = harness::prepare_context(cfg);
  const std::vector<design::PolicySpec> specs = {
      {design::PolicyKind::MinVariance, cfg.policy.r_in_fraction,
       cfg.policy.mix_probability},
      {design::PolicyKind::ZeroBias, cfg.policy.r_in_fraction,
       cfg.policy.mix_probability},
      {design::PolicyKind::VanillaOta, cfg.policy.r_in_fraction,
       cfg.policy.mix_probability},
      {design::PolicyKind::BbflInterior, cfg.policy.r_in_fraction,
       cfg.policy.mix_probability},
      {design::PolicyKind::BbflAlternating, cfg.policy.r_in_fraction,
       cfg.policy.mix_probability},
  };
  const auto report = harness::compare_policies(ctx, cfg, specs);
  write_all_outputs(args, ctx, cfg, report);
  for (const auto& run : report.policies)
    std::printf("%-18s eta=%.6g final loss=%.6g final normalized accuracy=%.4f\n",
                run.policy.c_str(), run.eta, run.final_loss_mean,
                run.final_accuracy_mean);
  return 0;
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const std::domain_error*>(&e)) return "domain_error";
  if (dynamic_cast<const model::ConvergenceError*>(&e)) return "convergence_error";
  if (dynamic_cast<const std::runtime_error*>(&e)) return "runtime_error";
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"over-the-air federated learning simulator"};
  app.require_subcommand(1);

  CommonArgs design_args, bound_args, run_args, compare_args;
  std::string design_path, trace_path;
  bool solve_w_tilde = false;

  auto* design_cmd =
      app.add_subcommand("design", "print and save per-device pre-scalers");
  add_common(design_cmd, design_args);

  auto* bound_cmd = app.add_subcommand(
      "bound", "emit the optimality-error bound breakdown as CSV");
  add_common(bound_cmd, bound_args);
  bound_cmd->add_option("--design", design_path, "design JSON (from `design`)");
  bound_cmd->add_flag("--solve-wtilde", solve_w_tilde,
                      "solve the weighted minimizer for the exact initial error");

  auto* run_cmd = app.add_subcommand("run", "run one policy, emit curves");
  add_common(run_cmd, run_args);
  run_cmd->add_option("--trace", trace_path,
                      "write a per-round JSONL trace of replicate 0");

  auto* compare_cmd =
      app.add_subcommand("compare", "run every policy on a shared deployment");
  add_common(compare_cmd, compare_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (design_cmd->parsed()) return cmd_design(design_args);
    if (bound_cmd->parsed()) return cmd_bound(bound_args, design_path, solve_w_tilde);
    if (run_cmd->parsed()) return cmd_run(run_args, trace_path);
    if (compare_cmd->parsed()) return cmd_compare(compare_args);
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", error_kind(e)}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
