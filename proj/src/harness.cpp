#include "otafl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "otafl/mnist.hpp"

namespace otafl::harness {

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double stderr_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

std::vector<model::LabeledExample> draw_test_subset(
    std::vector<model::LabeledExample> pool, std::size_t size,
    rng::RandomStream& stream) {
  if (pool.size() <= size) return pool;
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t j =
        k + static_cast<std::size_t>(stream.uniform() * (pool.size() - k));
    std::swap(pool[k], pool[std::min(j, pool.size() - 1)]);
  }
  pool.resize(size);
  return pool;
}

}  // namespace

std::size_t rounds_from_budget(double budget_ms, double bandwidth_hz,
                               std::size_t dim) {
  if (budget_ms <= 0.0 || bandwidth_hz <= 0.0 || dim == 0)
    throw std::invalid_argument("rounds_from_budget: invalid arguments");
  const auto rounds = static_cast<std::size_t>(
      std::floor(budget_ms / 1000.0 * bandwidth_hz / double(dim)));
  if (rounds == 0)
    throw std::invalid_argument(
        "rounds_from_budget: budget is shorter than one round (d/B)");
  return rounds;
}

double ExperimentContext::stepsize_limit(const ota::PreScalerSet* set) const {
  const double mu = loss_cfg.reg;  // every device shares the same mu_m
  double l_weighted = 0.0;
  if (set != nullptr) {
    for (std::size_t m = 0; m < smoothness.size(); ++m)
      l_weighted += set->participation[m] * smoothness[m];
  } else {
    l_weighted = mean_smoothness;
  }
  return 2.0 / (mu + l_weighted);
}

ExperimentContext prepare_context(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentContext ctx;

  std::vector<model::LabeledExample> pool;
  if (cfg.data.source == DataConfig::Source::Synthetic) {
    ctx.loss_cfg.reg = cfg.reg;
    ctx.loss_cfg.num_classes = cfg.data.synthetic.num_classes;
    ctx.loss_cfg.input_dim = cfg.data.synthetic.input_dim;
    auto blob_stream = rng::RandomStream::derive(cfg.seed, "blobs");
    model::SyntheticBlobs blobs(cfg.data.synthetic, blob_stream);
    // a pool several times the draw keeps the partition's sampling honest
    auto pool_stream = rng::RandomStream::derive(cfg.seed, "pool");
    pool = blobs.sample(5 * cfg.data.samples_per_class, pool_stream);
    auto test_stream = rng::RandomStream::derive(cfg.seed, "test");
    const int per_class_test = std::max(
        1, cfg.data.test_size / cfg.data.synthetic.num_classes);
    ctx.test_set = blobs.sample(per_class_test, test_stream);
  } else {
    pool = mnist::load_idx(cfg.data.train_images, cfg.data.train_labels);
    if (pool.empty()) throw std::runtime_error("empty training pool");
    ctx.loss_cfg.reg = cfg.reg;
    ctx.loss_cfg.num_classes = cfg.data.synthetic.num_classes;
    ctx.loss_cfg.input_dim = static_cast<int>(pool.front().features.size());
    auto test_pool = mnist::load_idx(cfg.data.test_images, cfg.data.test_labels);
    auto test_stream = rng::RandomStream::derive(cfg.seed, "test");
    ctx.test_set = draw_test_subset(std::move(test_pool), cfg.data.test_size,
                                    test_stream);
  }

  auto data_stream = rng::RandomStream::derive(cfg.seed, "data");
  ctx.datasets = model::partition_one_class_per_device(
      pool, static_cast<int>(cfg.num_devices), cfg.data.samples_per_class,
      ctx.loss_cfg, data_stream);

  if (cfg.deployment_file) {
    ctx.deployment = wireless::Deployment::load(*cfg.deployment_file);
    if (ctx.deployment.size() != cfg.num_devices)
      throw std::invalid_argument("deployment file device count mismatch");
  } else {
    auto deploy_stream = rng::RandomStream::derive(cfg.seed, "deployment");
    ctx.deployment = wireless::deploy_uniform_disk(cfg.num_devices, cfg.radio,
                                                   deploy_stream,
                                                   cfg.disk_sampling);
  }

  ctx.dim = ctx.loss_cfg.dim();
  ctx.rounds = rounds_from_budget(cfg.budget_ms, cfg.radio.bandwidth_hz, ctx.dim);
  ctx.energy_per_sample = cfg.radio.energy_per_sample();
  ctx.noise_psd = cfg.radio.noise_psd;
  ctx.w0.assign(ctx.dim, 0.0);

  auto solve = model::solve_global_minimizer(ctx.datasets, ctx.loss_cfg,
                                             cfg.minimizer_tol);
  ctx.w_star = std::move(solve.w);
  ctx.f_star = solve.loss;
  ctx.accuracy_star = model::test_accuracy(ctx.w_star, ctx.test_set, ctx.loss_cfg);

  ctx.smoothness.reserve(ctx.datasets.size());
  for (const auto& d : ctx.datasets)
    ctx.smoothness.push_back(model::estimate_smoothness(d, ctx.loss_cfg));
  ctx.mean_smoothness =
      std::accumulate(ctx.smoothness.begin(), ctx.smoothness.end(), 0.0) /
      ctx.smoothness.size();

  const auto probe = model::probe_trajectory(ctx.datasets, ctx.loss_cfg, ctx.w0,
                                             1.0 / ctx.mean_smoothness,
                                             cfg.probe_steps);
  ctx.g_max = model::estimate_gmax(ctx.datasets, probe, ctx.loss_cfg,
                                   cfg.gmax_safety);
  ctx.kappa = model::estimate_kappa(ctx.datasets, ctx.w_star, ctx.loss_cfg);
  return ctx;
}

RunResult run_replicate(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                        design::RoundPolicy& policy, const RunOptions& options) {
  const std::size_t n = ctx.datasets.size();
  const double round_ms = double(ctx.dim) / cfg.radio.bandwidth_hz * 1000.0;

  auto fading_stream = rng::RandomStream::derive(cfg.seed, "fading",
                                                 options.replicate);
  auto noise_stream = rng::RandomStream::derive(cfg.seed, "noise",
                                                options.replicate);
  auto policy_stream = rng::RandomStream::derive(cfg.seed, "policy",
                                                 options.replicate);

  RunResult res;
  res.replicate = options.replicate;
  res.transmit_frequency.assign(n, 0.0);
  res.participation_level.assign(n, 0.0);

  model::ParamVector w = ctx.w0;
  std::vector<std::vector<double>> gradients(n,
                                             std::vector<double>(ctx.dim, 0.0));

  const model::ParamVector& reference = options.distance_reference != nullptr
                                            ? *options.distance_reference
                                            : ctx.w_star;
  if (reference.size() != ctx.dim)
    throw std::invalid_argument("run_replicate: reference dimension mismatch");

  double initial_loss = 0.0;
  auto record = [&](std::size_t round) {
    RoundRecord r;
    r.round = round;
    r.elapsed_ms = double(round) * round_ms;
    if (options.log_loss)
      r.loss = model::global_loss(w, ctx.datasets, ctx.loss_cfg);
    if (options.log_accuracy)
      r.normalized_accuracy =
          model::normalized_accuracy(w, ctx.w_star, ctx.test_set, ctx.loss_cfg);
    double d2 = 0.0;
    for (std::size_t j = 0; j < ctx.dim; ++j) {
      const double diff = w[j] - reference[j];
      d2 += diff * diff;
    }
    r.dist_to_opt = std::sqrt(d2);
    res.trace.push_back(r);
    return r.loss;
  };

  initial_loss = record(0);
  std::size_t effective_rounds = 0;

  for (std::size_t t = 0; t < ctx.rounds; ++t) {
    for (std::size_t m = 0; m < n; ++m) {
      std::fill(gradients[m].begin(), gradients[m].end(), 0.0);
      model::accumulate_local_gradient(w, ctx.datasets[m], ctx.loss_cfg, 1.0,
                                       gradients[m]);
    }
    const auto fading = wireless::draw_fading(ctx.deployment, fading_stream);
    const auto noise =
        wireless::draw_noise_real(ctx.dim, ctx.noise_psd, noise_stream);

    design::RoundContext round_ctx;
    round_ctx.gradients = gradients;
    round_ctx.fading = fading;
    round_ctx.noise = noise;
    round_ctx.policy_rng = &policy_stream;
    const auto outcome = policy.round(round_ctx);

    if (options.trace_out != nullptr) {
      nlohmann::json line;
      line["t"] = t;
      line["chi"] = outcome.transmitted;
      line["g_hat_norm"] =
          outcome.skipped ? 0.0 : std::sqrt(squared_norm(outcome.g_hat));
      line["skipped"] = outcome.skipped;
      *options.trace_out << line.dump() << "\n";
    }

    if (outcome.skipped) {
      ++res.skipped_rounds;
    } else {
      ++effective_rounds;
      for (std::size_t j = 0; j < ctx.dim; ++j)
        w[j] -= options.eta * outcome.g_hat[j];
      for (std::size_t m = 0; m < n; ++m) {
        if (!outcome.transmitted[m]) continue;
        res.transmit_frequency[m] += 1.0;
        res.participation_level[m] += policy.transmit_weight(m, outcome);
      }
    }

    const bool log_now =
        ((t + 1) % cfg.log_every == 0) || (t + 1 == ctx.rounds);
    if (log_now) {
      const double loss = record(t + 1);
      if (options.log_loss &&
          (!std::isfinite(loss) || loss > 1e3 * std::max(initial_loss, 1e-300))) {
        res.diverged = true;
        if (options.stop_on_divergence) break;
      }
    }
  }

  if (effective_rounds > 0) {
    for (std::size_t m = 0; m < n; ++m) {
      res.transmit_frequency[m] /= double(effective_rounds);
      res.participation_level[m] /= double(effective_rounds);
    }
  }
  res.final_loss = res.trace.back().loss;
  res.final_normalized_accuracy = res.trace.back().normalized_accuracy;
  return res;
}

PolicyRun run_policy(const ExperimentContext& ctx, const ExperimentConfig& cfg,
                     const design::PolicySpec& spec, double eta, int replicates,
                     bool log_accuracy) {
  auto policy = design::make_policy(spec, ctx.deployment, ctx.dim,
                                    ctx.energy_per_sample, ctx.g_max);
  const std::size_t n = ctx.datasets.size();

  PolicyRun out;
  out.policy = design::policy_name(spec.kind);
  out.spec = spec;
  out.eta = eta;
  out.replicates = replicates;
  out.participation_level.assign(n, 0.0);
  out.transmit_frequency.assign(n, 0.0);
  out.participation_per_run.reserve(std::size_t(replicates) * n);

  std::vector<std::vector<double>> losses;      // [log point][replicate]
  std::vector<std::vector<double>> accuracies;  // [log point][replicate]
  std::vector<std::vector<double>> dists_sq;
  std::vector<double> final_losses;

  for (int r = 0; r < replicates; ++r) {
    RunOptions options;
    options.eta = eta;
    options.replicate = static_cast<std::uint64_t>(r);
    options.log_accuracy = log_accuracy;
    const RunResult run = run_replicate(ctx, cfg, *policy, options);
    if (out.time_ms.empty()) {
      out.time_ms.reserve(run.trace.size());
      for (const auto& rec : run.trace) out.time_ms.push_back(rec.elapsed_ms);
      losses.resize(run.trace.size());
      accuracies.resize(run.trace.size());
      dists_sq.resize(run.trace.size());
    }
    if (run.trace.size() != out.time_ms.size())
      throw std::logic_error("run_policy: inconsistent trace lengths");
    for (std::size_t i = 0; i < run.trace.size(); ++i) {
      losses[i].push_back(run.trace[i].loss);
      accuracies[i].push_back(run.trace[i].normalized_accuracy);
      dists_sq[i].push_back(run.trace[i].dist_to_opt * run.trace[i].dist_to_opt);
    }
    for (std::size_t m = 0; m < n; ++m) {
      out.participation_level[m] += run.participation_level[m] / replicates;
      out.transmit_frequency[m] += run.transmit_frequency[m] / replicates;
      out.participation_per_run.push_back(run.participation_level[m]);
    }
    out.skipped_rounds += run.skipped_rounds;
    final_losses.push_back(run.final_loss);
    out.final_accuracy_mean += run.final_normalized_accuracy / replicates;
  }

  for (std::size_t i = 0; i < out.time_ms.size(); ++i) {
    out.loss_mean.push_back(mean_of(losses[i]));
    out.loss_stderr.push_back(stderr_of(losses[i]));
    out.accuracy_mean.push_back(mean_of(accuracies[i]));
    out.accuracy_stderr.push_back(stderr_of(accuracies[i]));
    out.rms_dist_to_opt.push_back(std::sqrt(mean_of(dists_sq[i])));
  }
  out.final_loss_mean = mean_of(final_losses);
  out.final_loss_stderr = stderr_of(final_losses);
  return out;
}

std::vector<double> default_eta_grid(const ExperimentContext& ctx,
                                     const design::PolicySpec& spec,
                                     std::size_t points) {
  auto policy = design::make_policy(spec, ctx.deployment, ctx.dim,
                                    ctx.energy_per_sample, ctx.g_max);
  const double limit = ctx.stepsize_limit(policy->prescalers());
  std::vector<double> grid;
  grid.reserve(points);
  // log-spaced over [1e-3, 1] x limit
  for (std::size_t i = 0; i < points; ++i) {
    const double frac =
        points == 1 ? 1.0
                    : std::pow(10.0, -3.0 + 3.0 * double(i) / double(points - 1));
    grid.push_back(frac * limit);
  }
  return grid;
}

GridSearchResult grid_search_stepsize(const ExperimentContext& ctx,
                                      const ExperimentConfig& cfg,
                                      const design::PolicySpec& spec,
                                      std::vector<double> grid) {
  if (grid.empty())
    throw std::invalid_argument("grid_search_stepsize: empty grid");
  std::sort(grid.begin(), grid.end());

  // the convergence analysis only admits stepsizes up to 2/(mu~+L~) for
  // the statistical-CSI designs; clip their grids accordingly
  if (spec.kind == design::PolicyKind::MinVariance ||
      spec.kind == design::PolicyKind::ZeroBias) {
    auto policy = design::make_policy(spec, ctx.deployment, ctx.dim,
                                      ctx.energy_per_sample, ctx.g_max);
    const double limit = ctx.stepsize_limit(policy->prescalers());
    std::erase_if(grid, [&](double eta) { return eta > limit; });
    if (grid.empty())
      throw std::invalid_argument(
          "grid_search_stepsize: grid entirely above the admissible range");
  }

  auto policy = design::make_policy(spec, ctx.deployment, ctx.dim,
                                    ctx.energy_per_sample, ctx.g_max);

  GridSearchResult result;
  result.grid = grid;
  double best = std::numeric_limits<double>::infinity();
  for (double eta : grid) {
    double sum = 0.0;
    bool diverged = false;
    for (int r = 0; r < cfg.tuning_replicates && !diverged; ++r) {
      RunOptions options;
      options.eta = eta;
      options.replicate = static_cast<std::uint64_t>(r);
      options.log_accuracy = false;
      options.stop_on_divergence = true;
      try {
        const RunResult run = run_replicate(ctx, cfg, *policy, options);
        if (run.diverged || !std::isfinite(run.final_loss)) diverged = true;
        sum += run.final_loss;
      } catch (const std::runtime_error&) {
        // G_max violations at aggressive stepsizes count as divergence
        diverged = true;
      }
    }
    const double mean_final =
        diverged ? std::numeric_limits<double>::infinity()
                 : sum / cfg.tuning_replicates;
    result.mean_final_loss.push_back(mean_final);
    if (mean_final < best) {  // strict: ties keep the smaller stepsize
      best = mean_final;
      result.best_eta = eta;
    }
  }
  if (!std::isfinite(best)) {
    std::string msg = "grid_search_stepsize: every stepsize diverged; grid =";
    for (double eta : grid) msg += " " + std::to_string(eta);
    throw std::runtime_error(msg);
  }
  return result;
}

double time_to_reach(const PolicyRun& run, double target_loss) {
  for (std::size_t i = 0; i < run.time_ms.size(); ++i)
    if (run.loss_mean[i] <= target_loss) return run.time_ms[i];
  return std::numeric_limits<double>::quiet_NaN();
}

ComparisonReport compare_policies(const ExperimentContext& ctx,
                                  const ExperimentConfig& cfg,
                                  const std::vector<design::PolicySpec>& specs) {
  if (specs.empty())
    throw std::invalid_argument("compare_policies: no policies given");
  ComparisonReport report;
  for (const auto& spec : specs) {
    double eta = cfg.eta;
    if (eta <= 0.0) {
      const auto grid =
          cfg.eta_grid.empty() ? default_eta_grid(ctx, spec) : cfg.eta_grid;
      eta = grid_search_stepsize(ctx, cfg, spec, grid).best_eta;
    }
    report.policies.push_back(
        run_policy(ctx, cfg, spec, eta, cfg.replicates, true));
  }
  const std::size_t k = report.policies.size();
  report.time_to_target_ms.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      report.time_to_target_ms[a][b] =
          time_to_reach(report.policies[a], report.policies[b].final_loss_mean);
  return report;
}

bound::BoundConstants assemble_constants(const ExperimentContext& ctx,
                                         const ota::PreScalerSet& set, double eta,
                                         bool solve_w_tilde,
                                         double minimizer_tol) {
  if (set.size() != ctx.datasets.size())
    throw std::invalid_argument("assemble_constants: device count mismatch");
  bound::BoundConstants c;
  c.num_devices = set.size();
  c.dim = ctx.dim;
  c.g_max = ctx.g_max;
  c.kappa = ctx.kappa;
  c.energy_per_sample = ctx.energy_per_sample;
  c.noise_psd = ctx.noise_psd;
  c.eta = eta;
  c.mu_tilde = ctx.loss_cfg.reg;
  c.mu_bar = ctx.loss_cfg.reg;
  c.l_bar = ctx.mean_smoothness;
  c.l_tilde = 0.0;
  for (std::size_t m = 0; m < set.size(); ++m)
    c.l_tilde += set.participation[m] * ctx.smoothness[m];

  double e0 = 0.0;
  for (std::size_t j = 0; j < ctx.dim; ++j) {
    const double diff = ctx.w0[j] - ctx.w_star[j];
    e0 += diff * diff;
  }
  c.e0 = e0;

  if (solve_w_tilde) {
    const auto solve = model::solve_weighted_minimizer(
        ctx.datasets, set.participation, ctx.loss_cfg, minimizer_tol);
    double e0t = 0.0;
    for (std::size_t j = 0; j < ctx.dim; ++j) {
      const double diff = ctx.w0[j] - solve.w[j];
      e0t += diff * diff;
    }
    c.e0_tilde = e0t;
    c.e0_tilde_solved = true;
  } else {
    const double bias = bound::model_bias_bound(c, set.participation);
    const double root = std::sqrt(e0) + bias;
    c.e0_tilde = root * root;
    c.e0_tilde_solved = false;
  }
  return c;
}

void write_curves_csv(const std::string& path,
                      const std::vector<PolicyRun>& runs, bool accuracy) {
  if (runs.empty()) throw std::invalid_argument("write_curves_csv: no runs");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "time_ms";
  for (const auto& r : runs)
    out << "," << r.policy << "_mean," << r.policy << "_stderr";
  out << "\n";
  out.precision(12);
  const auto& time = runs.front().time_ms;
  for (std::size_t i = 0; i < time.size(); ++i) {
    out << time[i];
    for (const auto& r : runs) {
      if (r.time_ms.size() != time.size())
        throw std::logic_error("write_curves_csv: mismatched time grids");
      if (accuracy)
        out << "," << r.accuracy_mean[i] << "," << r.accuracy_stderr[i];
      else
        out << "," << r.loss_mean[i] << "," << r.loss_stderr[i];
    }
    out << "\n";
  }
}

void write_participation_csv(const std::string& path,
                             const ExperimentContext& ctx,
                             const std::vector<PolicyRun>& runs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const std::size_t n = ctx.deployment.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // plotting convention: devices in order of decreasing path loss
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ctx.deployment.sites[a].path_loss > ctx.deployment.sites[b].path_loss;
  });
  out << "device,distance_m,path_loss";
  for (const auto& r : runs)
    out << "," << r.policy << "_level," << r.policy << "_freq";
  out << "\n";
  out.precision(12);
  for (std::size_t m : order) {
    out << m << "," << ctx.deployment.sites[m].distance_m << ","
        << ctx.deployment.sites[m].path_loss;
    for (const auto& r : runs)
      out << "," << double(n) * r.participation_level[m] << ","
          << r.transmit_frequency[m];
    out << "\n";
  }
}

void write_bound_csv(const std::string& path,
                     const bound::BoundConstants& constants,
                     const ota::PreScalerSet& set, std::size_t rounds,
                     double round_ms, std::size_t log_every,
                     const std::vector<double>* empirical_rms) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,time_ms,initialization,model_bias,transmission_variance,"
         "noise_variance,total";
  if (empirical_rms != nullptr) out << ",empirical_rms";
  out << "\n";
  out.precision(12);
  // identical grid to the run traces: 0, k, 2k, ..., plus the final round
  std::vector<std::size_t> ts;
  ts.push_back(0);
  for (std::size_t t = log_every; t < rounds; t += log_every) ts.push_back(t);
  if (rounds > 0) ts.push_back(rounds);
  for (std::size_t row = 0; row < ts.size(); ++row) {
    const std::size_t t = ts[row];
    const auto b = bound::optimality_error_bound(t, constants, set);
    out << t << "," << double(t) * round_ms << "," << b.initialization << ","
        << b.model_bias << "," << b.transmission_variance << ","
        << b.noise_variance << "," << b.total;
    if (empirical_rms != nullptr) {
      out << ","
          << (row < empirical_rms->size()
                  ? (*empirical_rms)[row]
                  : std::numeric_limits<double>::quiet_NaN());
    }
    out << "\n";
  }
}

nlohmann::json summary_json(const ExperimentContext& ctx,
                            const ExperimentConfig& cfg,
                            const ComparisonReport& report) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["constants"] = {{"dim", ctx.dim},
                    {"rounds", ctx.rounds},
                    {"round_ms", double(ctx.dim) / cfg.radio.bandwidth_hz * 1000.0},
                    {"energy_per_sample", ctx.energy_per_sample},
                    {"noise_psd", ctx.noise_psd},
                    {"g_max", ctx.g_max},
                    {"kappa", ctx.kappa},
                    {"mu", ctx.loss_cfg.reg},
                    {"mean_smoothness", ctx.mean_smoothness},
                    {"f_star", ctx.f_star},
                    {"accuracy_star", ctx.accuracy_star}};
  j["deployment"] = ctx.deployment.to_json();
  j["policies"] = nlohmann::json::array();
  for (const auto& r : report.policies) {
    j["policies"].push_back({{"policy", r.policy},
                             {"eta", r.eta},
                             {"replicates", r.replicates},
                             {"final_loss_mean", r.final_loss_mean},
                             {"final_loss_stderr", r.final_loss_stderr},
                             {"final_normalized_accuracy", r.final_accuracy_mean},
                             {"participation_level", r.participation_level},
                             {"transmit_frequency", r.transmit_frequency},
                             {"skipped_rounds", r.skipped_rounds}});
  }
  auto& ttt = j["time_to_target_ms"] = nlohmann::json::object();
  for (std::size_t a = 0; a < report.policies.size(); ++a) {
    auto& row = ttt[report.policies[a].policy] = nlohmann::json::object();
    for (std::size_t b = 0; b < report.policies.size(); ++b) {
      const double v = report.time_to_target_ms[a][b];
      row[report.policies[b].policy] =
          std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }
  }
  return j;
}

}  // namespace otafl::harness
