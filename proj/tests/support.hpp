#pragma once

// shared helpers for the test suites: small statistics utilities and
// independent oracles kept away from the library implementation paths

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "otafl/model.hpp"
#include "otafl/random.hpp"

namespace testsupport {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline double sample_variance(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1);
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Kolmogorov-Smirnov statistic of samples against the unit-mean
// exponential distribution.
inline double ks_statistic_exponential(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 1.0 - std::exp(-samples[i]);
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return d;
}

// Wald-type homogeneity statistic: sum_m (x_m - mean)^2 / var(x_m), where
// each x_m is a mean over replicates and var is its squared standard
// error. Degenerate all-equal columns return 0.
inline double homogeneity_statistic(std::span<const double> values,
                                    std::span<const double> variances) {
  const double m = mean(values);
  double q = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dev = values[i] - m;
    if (std::abs(dev) <= 1e-12 * std::max(1.0, std::abs(m))) continue;
    q += dev * dev / std::max(variances[i], 1e-300);
  }
  return q;
}

inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t pos = 0; pos < idx.size();) {
    std::size_t end = pos;
    while (end + 1 < idx.size() && v[idx[end + 1]] == v[idx[pos]]) ++end;
    const double avg = (pos + end) / 2.0 + 1.0;  // average rank for ties
    for (std::size_t k = pos; k <= end; ++k) r[idx[k]] = avg;
    pos = end + 1;
  }
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

// one-sided (positive association) permutation p-value for Spearman rho
inline double spearman_pvalue_onesided(std::span<const double> x,
                                       std::span<const double> y,
                                       int permutations = 200000,
                                       std::uint64_t seed = 0x5ea1) {
  const double observed = spearman(x, y);
  std::vector<double> shuffled(y.begin(), y.end());
  otafl::rng::RandomStream stream(seed);
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t k = shuffled.size() - 1; k > 0; --k) {
      const auto j = static_cast<std::size_t>(stream.uniform() * (k + 1));
      std::swap(shuffled[k], shuffled[std::min(j, k)]);
    }
    if (spearman(x, shuffled) >= observed - 1e-12) ++at_least;
  }
  return (at_least + 1.0) / (permutations + 1.0);
}

// central finite difference of a scalar function along coordinate j
template <typename F>
double central_difference(F&& f, otafl::model::ParamVector w, std::size_t j,
                          double step) {
  w[j] += step;
  const double hi = f(w);
  w[j] -= 2.0 * step;
  const double lo = f(w);
  return (hi - lo) / (2.0 * step);
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

// tiny IDX pair on disk for loader tests
inline void write_idx_pair(const std::string& images_path,
                           const std::string& labels_path,
                           const std::vector<std::vector<unsigned char>>& images,
                           const std::vector<unsigned char>& labels,
                           std::uint32_t rows, std::uint32_t cols,
                           std::uint32_t images_magic = 0x00000803,
                           std::uint32_t labels_magic = 0x00000801) {
  std::ofstream img(images_path, std::ios::binary);
  write_be32(img, images_magic);
  write_be32(img, static_cast<std::uint32_t>(images.size()));
  write_be32(img, rows);
  write_be32(img, cols);
  for (const auto& im : images)
    img.write(reinterpret_cast<const char*>(im.data()), im.size());
  std::ofstream lab(labels_path, std::ios::binary);
  write_be32(lab, labels_magic);
  write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  for (unsigned char y : labels) lab.write(reinterpret_cast<const char*>(&y), 1);
}

// deterministic random dataset for oracle tests
inline otafl::model::DeviceDataset random_dataset(int device_id, int examples,
                                                  const otafl::model::LossConfig& cfg,
                                                  otafl::rng::RandomStream& stream) {
  otafl::model::DeviceDataset d;
  d.device_id = device_id;
  for (int i = 0; i < examples; ++i) {
    otafl::model::LabeledExample ex;
    ex.label = static_cast<int>(stream.uniform() * cfg.num_classes);
    ex.label = std::min(ex.label, cfg.num_classes - 1);
    ex.features.resize(cfg.input_dim);
    for (auto& v : ex.features) v = stream.uniform();
    d.examples.push_back(std::move(ex));
  }
  return d;
}

inline otafl::model::ParamVector random_params(const otafl::model::LossConfig& cfg,
                                               otafl::rng::RandomStream& stream,
                                               double scale = 1.0) {
  otafl::model::ParamVector w(cfg.dim());
  for (auto& v : w) v = scale * stream.normal();
  return w;
}

}  // namespace testsupport
