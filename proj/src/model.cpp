#include "otafl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace otafl::model {

namespace {

constexpr double kSimplexTol = 1e-9;

// four fixed lanes; the deterministic order doubles as the reproducible
// reduction the rest of the code relies on
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_dims(const ParamVector& w, const DeviceDataset& data,
                const LossConfig& cfg) {
  cfg.validate();
  if (w.size() != cfg.dim())
    throw std::invalid_argument("parameter vector has length " +
                                std::to_string(w.size()) + ", expected " +
                                std::to_string(cfg.dim()));
  if (data.examples.empty())
    throw std::invalid_argument("device dataset is empty");
  for (const auto& ex : data.examples) {
    if (ex.features.size() != static_cast<std::size_t>(cfg.input_dim))
      throw std::invalid_argument("feature length mismatch on device " +
                                  std::to_string(data.device_id));
    if (ex.label < 0 || ex.label >= cfg.num_classes)
      throw std::invalid_argument("label out of range on device " +
                                  std::to_string(data.device_id));
  }
}

void check_weights(std::span<const double> p, std::size_t n) {
  if (p.size() != n)
    throw std::invalid_argument("participation weights size mismatch");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("participation weights must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw std::invalid_argument("participation weights must sum to 1");
}

// logits for one example; bias sits at the end of each class block
void compute_logits(const ParamVector& w, const LabeledExample& ex,
                    const LossConfig& cfg, std::vector<double>& logits) {
  const std::size_t block = cfg.input_dim + 1;
  for (int c = 0; c < cfg.num_classes; ++c) {
    const double* wc = w.data() + c * block;
    logits[c] = dot(wc, ex.features.data(), cfg.input_dim) + wc[cfg.input_dim];
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void LossConfig::validate() const {
  if (reg <= 0.0) throw std::invalid_argument("LossConfig: reg must be > 0");
  if (num_classes < 1) throw std::invalid_argument("LossConfig: num_classes < 1");
  if (input_dim < 1) throw std::invalid_argument("LossConfig: input_dim < 1");
}

double local_loss(const ParamVector& w, const DeviceDataset& data,
                  const LossConfig& cfg) {
  check_dims(w, data, cfg);
  std::vector<double> logits(cfg.num_classes);
  double data_term = 0.0;
  for (const auto& ex : data.examples) {
    compute_logits(w, ex, cfg, logits);
    data_term += log_sum_exp(logits) - logits[ex.label];
  }
  return 0.5 * cfg.reg * squared_norm(w) + data_term / data.examples.size();
}

void accumulate_local_gradient(const ParamVector& w, const DeviceDataset& data,
                               const LossConfig& cfg, double weight,
                               ParamVector& acc) {
  check_dims(w, data, cfg);
  if (acc.size() != w.size())
    throw std::invalid_argument("gradient accumulator size mismatch");
  const std::size_t block = cfg.input_dim + 1;
  const double inv_n = weight / data.examples.size();
  std::vector<double> logits(cfg.num_classes);
  for (const auto& ex : data.examples) {
    compute_logits(w, ex, cfg, logits);
    const double lse = log_sum_exp(logits);
    for (int c = 0; c < cfg.num_classes; ++c) {
      double coeff = std::exp(logits[c] - lse);
      if (c == ex.label) coeff -= 1.0;
      coeff *= inv_n;
      double* gc = acc.data() + c * block;
      const double* x = ex.features.data();
      for (int j = 0; j < cfg.input_dim; ++j) gc[j] += coeff * x[j];
      gc[cfg.input_dim] += coeff;  // bias feature is the constant 1
    }
  }
  const double wr = weight * cfg.reg;
  for (std::size_t i = 0; i < w.size(); ++i) acc[i] += wr * w[i];
}

ParamVector local_gradient(const ParamVector& w, const DeviceDataset& data,
                           const LossConfig& cfg) {
  ParamVector g(w.size(), 0.0);
  accumulate_local_gradient(w, data, cfg, 1.0, g);
  return g;
}

double global_loss(const ParamVector& w, std::span<const DeviceDataset> datasets,
                   const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  // shares the weighted path so uniform weighted_loss agrees bit-for-bit
  std::vector<double> uniform(datasets.size(), 1.0 / datasets.size());
  return weighted_loss(w, datasets, uniform, cfg);
}

ParamVector global_gradient(const ParamVector& w,
                            std::span<const DeviceDataset> datasets,
                            const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  ParamVector g(w.size(), 0.0);
  const double inv_n = 1.0 / datasets.size();
  for (const auto& d : datasets) accumulate_local_gradient(w, d, cfg, inv_n, g);
  return g;
}

double weighted_loss(const ParamVector& w, std::span<const DeviceDataset> datasets,
                     std::span<const double> p, const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  check_weights(p, datasets.size());
  double s = 0.0;
  for (std::size_t m = 0; m < datasets.size(); ++m)
    s += p[m] * local_loss(w, datasets[m], cfg);
  return s;
}

ParamVector weighted_gradient(const ParamVector& w,
                              std::span<const DeviceDataset> datasets,
                              std::span<const double> p, const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  check_weights(p, datasets.size());
  ParamVector g(w.size(), 0.0);
  for (std::size_t m = 0; m < datasets.size(); ++m)
    if (p[m] != 0.0) accumulate_local_gradient(w, datasets[m], cfg, p[m], g);
  return g;
}

std::vector<DeviceDataset> partition_one_class_per_device(
    const std::vector<LabeledExample>& pool, int num_devices,
    int samples_per_class, const LossConfig& cfg, rng::RandomStream& stream) {
  cfg.validate();
  if (num_devices != cfg.num_classes)
    throw std::invalid_argument(
        "one-class-per-device partition requires num_devices == num_classes");
  if (samples_per_class < 1)
    throw std::invalid_argument("samples_per_class must be >= 1");

  std::vector<std::vector<std::size_t>> by_class(cfg.num_classes);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int y = pool[i].label;
    if (y < 0 || y >= cfg.num_classes)
      throw std::invalid_argument("pool label out of range");
    by_class[y].push_back(i);
  }

  std::vector<DeviceDataset> out(num_devices);
  for (int m = 0; m < num_devices; ++m) {
    auto& ids = by_class[m];
    if (ids.empty())
      throw std::invalid_argument("pool has no examples of class " +
                                  std::to_string(m));
    // partial Fisher-Yates draw of the requested count
    const std::size_t take =
        std::min<std::size_t>(ids.size(), samples_per_class);
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(stream.uniform() * (ids.size() - k));
      std::swap(ids[k], ids[std::min(j, ids.size() - 1)]);
    }
    out[m].device_id = m;
    out[m].examples.reserve(take);
    for (std::size_t k = 0; k < take; ++k) out[m].examples.push_back(pool[ids[k]]);
  }
  return out;
}

double estimate_smoothness(const DeviceDataset& data, const LossConfig& cfg) {
  cfg.validate();
  if (data.examples.empty())
    throw std::invalid_argument("estimate_smoothness: empty dataset");
  const std::size_t n = cfg.input_dim + 1;
  const double inv_count = 1.0 / data.examples.size();

  // v -> (1/|D|) sum_i x~_i (x~_i . v), never forming the Gram matrix
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& ex : data.examples) {
      const double* x = ex.features.data();
      double proj = v[cfg.input_dim];  // bias component of x~ is 1
      for (int j = 0; j < cfg.input_dim; ++j) proj += x[j] * v[j];
      proj *= inv_count;
      for (int j = 0; j < cfg.input_dim; ++j) out[j] += proj * x[j];
      out[cfg.input_dim] += proj;
    }
  };

  rng::RandomStream start(0x9a7e11u);
  std::vector<double> v(n), av(n);
  for (auto& x : v) x = start.normal();
  double vnorm = std::sqrt(squared_norm(v));
  for (auto& x : v) x /= vnorm;

  constexpr int kMaxIters = 100000;
  double lambda_prev = 0.0;
  int settled = 0;
  for (int it = 0; it < kMaxIters; ++it) {
    apply(v, av);
    const double lambda = dot(v.data(), av.data(), n);  // Rayleigh quotient
    const double an = std::sqrt(squared_norm(av));
    if (an == 0.0) return cfg.reg;  // all-zero extended features cannot occur (bias=1)
    for (std::size_t j = 0; j < n; ++j) v[j] = av[j] / an;
    if (std::abs(lambda - lambda_prev) <= 1e-13 * std::max(1.0, std::abs(lambda))) {
      if (++settled >= 3) return cfg.reg + 0.5 * lambda;
    } else {
      settled = 0;
    }
    lambda_prev = lambda;
  }
  throw std::runtime_error("estimate_smoothness: power iteration did not settle");
}

double mean_smoothness(std::span<const DeviceDataset> datasets,
                       const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  double s = 0.0;
  for (const auto& d : datasets) s += estimate_smoothness(d, cfg);
  return s / datasets.size();
}

MinimizerResult solve_weighted_minimizer(std::span<const DeviceDataset> datasets,
                                         std::span<const double> p,
                                         const LossConfig& cfg, double tol,
                                         long max_iterations,
                                         const ParamVector* start) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  check_weights(p, datasets.size());
  if (tol <= 0.0) throw std::invalid_argument("tolerance must be > 0");
  if (start != nullptr && start->size() != cfg.dim())
    throw std::invalid_argument("start vector has the wrong dimension");

  double lipschitz = 0.0;
  for (std::size_t m = 0; m < datasets.size(); ++m)
    lipschitz += p[m] * estimate_smoothness(datasets[m], cfg);
  const double mu = cfg.reg;
  const double step = 1.0 / lipschitz;
  const double sq = std::sqrt(lipschitz / mu);
  const double beta = (sq - 1.0) / (sq + 1.0);

  ParamVector w = start != nullptr ? *start : ParamVector(cfg.dim(), 0.0);
  ParamVector y = w, w_next(cfg.dim());
  MinimizerResult best;
  best.gradient_norm = std::numeric_limits<double>::infinity();

  for (long it = 0; it < max_iterations; ++it) {
    ParamVector g = weighted_gradient(y, datasets, p, cfg);
    const double gnorm = std::sqrt(squared_norm(g));
    if (gnorm <= tol) {
      MinimizerResult res;
      res.w = std::move(y);
      res.loss = weighted_loss(res.w, datasets, p, cfg);
      res.gradient_norm = gnorm;
      res.iterations = it;
      return res;
    }
    if (gnorm < best.gradient_norm) {
      best.w = y;
      best.gradient_norm = gnorm;
      best.iterations = it;
    }
    double advance = 0.0;  // g . (w_next - w), restart signal
    for (std::size_t j = 0; j < w.size(); ++j) {
      w_next[j] = y[j] - step * g[j];
      advance += g[j] * (w_next[j] - w[j]);
    }
    if (advance > 0.0) {
      y = w_next;  // momentum points uphill: restart
    } else {
      for (std::size_t j = 0; j < w.size(); ++j)
        y[j] = w_next[j] + beta * (w_next[j] - w[j]);
    }
    std::swap(w, w_next);
  }
  best.loss = weighted_loss(best.w, datasets, p, cfg);
  throw ConvergenceError("minimizer did not reach gradient tolerance " +
                             std::to_string(tol) + " within " +
                             std::to_string(max_iterations) + " iterations",
                         std::move(best));
}

MinimizerResult solve_global_minimizer(std::span<const DeviceDataset> datasets,
                                       const LossConfig& cfg, double tol,
                                       long max_iterations,
                                       const ParamVector* start) {
  std::vector<double> uniform(datasets.size(), 1.0 / datasets.size());
  return solve_weighted_minimizer(datasets, uniform, cfg, tol, max_iterations,
                                  start);
}

double estimate_kappa(std::span<const DeviceDataset> datasets,
                      const ParamVector& w_star, const LossConfig& cfg) {
  if (datasets.empty()) throw std::invalid_argument("no device datasets");
  double s = 0.0;
  for (const auto& d : datasets)
    s += squared_norm(local_gradient(w_star, d, cfg));
  return std::sqrt(s / datasets.size());
}

std::vector<ParamVector> probe_trajectory(std::span<const DeviceDataset> datasets,
                                          const LossConfig& cfg,
                                          const ParamVector& w0, double eta,
                                          int steps) {
  if (eta <= 0.0) throw std::invalid_argument("probe stepsize must be > 0");
  std::vector<ParamVector> iterates;
  iterates.reserve(steps + 1);
  iterates.push_back(w0);
  ParamVector w = w0;
  for (int t = 0; t < steps; ++t) {
    ParamVector g = global_gradient(w, datasets, cfg);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= eta * g[j];
    iterates.push_back(w);
  }
  return iterates;
}

double estimate_gmax(std::span<const DeviceDataset> datasets,
                     std::span<const ParamVector> probe, const LossConfig& cfg,
                     double safety_factor) {
  if (probe.empty()) throw std::invalid_argument("estimate_gmax: empty probe");
  if (safety_factor <= 0.0)
    throw std::invalid_argument("estimate_gmax: safety factor must be > 0");
  double max_sq = 0.0;
  for (const auto& w : probe)
    for (const auto& d : datasets)
      max_sq = std::max(max_sq, squared_norm(local_gradient(w, d, cfg)));
  return std::max(safety_factor * std::sqrt(max_sq), 1e-12);
}

double test_accuracy(const ParamVector& w,
                     std::span<const LabeledExample> test_set,
                     const LossConfig& cfg) {
  cfg.validate();
  if (test_set.empty()) throw std::invalid_argument("empty test set");
  if (w.size() != cfg.dim())
    throw std::invalid_argument("parameter vector length mismatch");
  const std::size_t block = cfg.input_dim + 1;
  std::size_t correct = 0;
  for (const auto& ex : test_set) {
    if (ex.features.size() != static_cast<std::size_t>(cfg.input_dim))
      throw std::invalid_argument("test example feature length mismatch");
    int arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.num_classes; ++c) {
      const double* wc = w.data() + c * block;
      const double logit =
          dot(wc, ex.features.data(), cfg.input_dim) + wc[cfg.input_dim];
      if (logit > best) {  // strict: ties resolve to the lowest class index
        best = logit;
        arg = c;
      }
    }
    if (arg == ex.label) ++correct;
  }
  return static_cast<double>(correct) / test_set.size();
}

double normalized_accuracy(const ParamVector& w, const ParamVector& w_star,
                           std::span<const LabeledExample> test_set,
                           const LossConfig& cfg) {
  const double ref = test_accuracy(w_star, test_set, cfg);
  if (ref <= 0.0)
    throw std::invalid_argument("reference minimizer has zero test accuracy");
  return test_accuracy(w, test_set, cfg) / ref;
}

SyntheticBlobs::SyntheticBlobs(const SyntheticSpec& spec, rng::RandomStream& stream)
    : spec_(spec) {
  if (spec.input_dim < 1 || spec.num_classes < 1 || spec.noise_sigma < 0.0)
    throw std::invalid_argument("SyntheticSpec: invalid parameters");
  means_.resize(spec.num_classes);
  for (auto& mean : means_) {
    mean.resize(spec.input_dim);
    for (auto& v : mean) v = stream.uniform();
  }
}

std::vector<LabeledExample> SyntheticBlobs::sample(int per_class,
                                                   rng::RandomStream& stream) const {
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  std::vector<LabeledExample> out;
  out.reserve(static_cast<std::size_t>(per_class) * spec_.num_classes);
  for (int c = 0; c < spec_.num_classes; ++c) {
    for (int k = 0; k < per_class; ++k) {
      LabeledExample ex;
      ex.label = c;
      ex.features.resize(spec_.input_dim);
      for (int j = 0; j < spec_.input_dim; ++j)
        ex.features[j] = means_[c][j] + spec_.noise_sigma * stream.normal();
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace otafl::model
