#include "otafl/ota.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace otafl::ota {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be > 0");
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

bool transmit_decision(double gamma, double h_mag, std::size_t dim,
                       double energy_per_sample, double g_max) {
  check_positive(gamma, "gamma");
  check_positive(energy_per_sample, "energy per sample");
  check_positive(g_max, "G_max");
  if (dim == 0) throw std::invalid_argument("dim must be > 0");
  if (h_mag < 0.0) throw std::invalid_argument("|h| must be >= 0");
  return gamma <= std::sqrt(double(dim) * energy_per_sample) * h_mag / g_max;
}

double transmit_probability(double gamma, double path_loss, std::size_t dim,
                            double energy_per_sample, double g_max) {
  check_positive(gamma, "gamma");
  check_positive(path_loss, "path loss");
  check_positive(energy_per_sample, "energy per sample");
  check_positive(g_max, "G_max");
  if (dim == 0) throw std::invalid_argument("dim must be > 0");
  // |h|^2 is exponential with mean path_loss; the threshold tail is exact
  return std::exp(-gamma * gamma * g_max * g_max /
                  (double(dim) * path_loss * energy_per_sample));
}

double alpha_m(double gamma, double path_loss, std::size_t dim,
               double energy_per_sample, double g_max) {
  return gamma * transmit_probability(gamma, path_loss, dim, energy_per_sample,
                                      g_max);
}

PreScalerSet PreScalerSet::from_gammas(std::vector<double> gammas,
                                       std::vector<double> path_losses,
                                       std::size_t dim, double energy_per_sample,
                                       double g_max) {
  if (gammas.empty() || gammas.size() != path_losses.size())
    throw std::invalid_argument("PreScalerSet: gamma/path-loss size mismatch");
  PreScalerSet set;
  set.dim = dim;
  set.energy_per_sample = energy_per_sample;
  set.g_max = g_max;
  set.gamma = std::move(gammas);
  set.path_loss = std::move(path_losses);
  const std::size_t n = set.gamma.size();
  set.alpha_per_device.resize(n);
  set.transmit_prob.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    set.transmit_prob[m] = transmit_probability(set.gamma[m], set.path_loss[m],
                                                dim, energy_per_sample, g_max);
    set.alpha_per_device[m] = set.gamma[m] * set.transmit_prob[m];
    set.alpha += set.alpha_per_device[m];
  }
  if (!(set.alpha > 0.0))
    throw std::invalid_argument("PreScalerSet: post-scaler alpha is zero");
  set.participation.resize(n);
  for (std::size_t m = 0; m < n; ++m)
    set.participation[m] = set.alpha_per_device[m] / set.alpha;
  return set;
}

std::vector<double> participation_levels(const PreScalerSet& set) {
  if (!(set.alpha > 0.0))
    throw std::invalid_argument("participation_levels: alpha is zero");
  return set.participation;
}

RoundOutcome ota_round(std::span<const std::vector<double>> gradients,
                       std::span<const std::complex<double>> fading,
                       std::span<const double> noise, const PreScalerSet& set) {
  const std::size_t n = set.size();
  if (gradients.size() != n || fading.size() != n)
    throw std::invalid_argument("ota_round: device count mismatch");
  if (noise.size() != set.dim)
    throw std::invalid_argument("ota_round: noise dimension mismatch");

  RoundOutcome out;
  out.transmitted.assign(n, 0);
  out.energy_per_symbol.assign(n, 0.0);
  out.g_hat.assign(set.dim, 0.0);

  for (std::size_t m = 0; m < n; ++m) {
    if (gradients[m].size() != set.dim)
      throw std::invalid_argument("ota_round: gradient dimension mismatch");
    const double norm_sq = squared_norm(gradients[m]);
    if (norm_sq > set.g_max * set.g_max)
      throw std::runtime_error(
          "ota_round: gradient norm " + std::to_string(std::sqrt(norm_sq)) +
          " of device " + std::to_string(m) + " exceeds G_max " +
          std::to_string(set.g_max) + " (G_max was underestimated)");
    const double h_mag = std::abs(fading[m]);
    if (!transmit_decision(set.gamma[m], h_mag, set.dim, set.energy_per_sample,
                           set.g_max))
      continue;
    out.transmitted[m] = 1;
    out.energy_per_symbol[m] =
        set.gamma[m] * set.gamma[m] * norm_sq / (double(set.dim) * h_mag * h_mag);
    const double scale = set.gamma[m];
    const auto& g = gradients[m];
    for (std::size_t j = 0; j < set.dim; ++j) out.g_hat[j] += scale * g[j];
  }
  const double inv_alpha = 1.0 / set.alpha;
  for (std::size_t j = 0; j < set.dim; ++j)
    out.g_hat[j] = (out.g_hat[j] + noise[j]) * inv_alpha;
  return out;
}

namespace {

ErrorVariance variance_from_norms(const PreScalerSet& set,
                                  std::span<const double> norms_sq,
                                  double noise_psd) {
  ErrorVariance v;
  for (std::size_t m = 0; m < set.size(); ++m) {
    const double p = set.participation[m];
    const double ratio = set.gamma[m] / set.alpha_per_device[m];  // = 1 / P_m
    v.transmission += p * p * norms_sq[m] * (ratio - 1.0);
  }
  v.noise = double(set.dim) * noise_psd / (set.alpha * set.alpha);
  return v;
}

}  // namespace

ErrorVariance error_variance_exact(const PreScalerSet& set,
                                   std::span<const std::vector<double>> gradients,
                                   double noise_psd) {
  if (gradients.size() != set.size())
    throw std::invalid_argument("error_variance_exact: device count mismatch");
  std::vector<double> norms_sq(set.size());
  for (std::size_t m = 0; m < set.size(); ++m)
    norms_sq[m] = squared_norm(gradients[m]);
  return variance_from_norms(set, norms_sq, noise_psd);
}

ErrorVariance error_variance_bound(const PreScalerSet& set, double noise_psd) {
  std::vector<double> norms_sq(set.size(), set.g_max * set.g_max);
  return variance_from_norms(set, norms_sq, noise_psd);
}

}  // namespace otafl::ota
