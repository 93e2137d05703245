#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace otafl::ota {

// Transmit iff gamma <= sqrt(d * E_s) * |h| / G_max (inclusive), which is
// what keeps the per-round energy within E_s per sample.
bool transmit_decision(double gamma, double h_mag, std::size_t dim,
                       double energy_per_sample, double g_max);

// P(transmit) under Rayleigh fading with average path loss `path_loss`.
double transmit_probability(double gamma, double path_loss, std::size_t dim,
                            double energy_per_sample, double g_max);

// alpha_m = gamma * exp(-gamma^2 G_max^2 / (d Lambda E_s)), the expected
// pre-scaler weight a device contributes to the received sum.
double alpha_m(double gamma, double path_loss, std::size_t dim,
               double energy_per_sample, double g_max);

// Per-device pre-scalers plus everything derived from them. The receiver
// post-scaler is alpha = sum_m alpha_m; participation p_m = alpha_m / alpha.
struct PreScalerSet {
  std::vector<double> gamma;
  std::vector<double> path_loss;
  std::vector<double> alpha_per_device;
  std::vector<double> transmit_prob;
  std::vector<double> participation;
  double alpha = 0.0;
  std::size_t dim = 0;
  double energy_per_sample = 0.0;
  double g_max = 0.0;

  std::size_t size() const { return gamma.size(); }

  static PreScalerSet from_gammas(std::vector<double> gammas,
                                  std::vector<double> path_losses,
                                  std::size_t dim, double energy_per_sample,
                                  double g_max);
};

// p vector of a set; errors if every alpha_m is zero.
std::vector<double> participation_levels(const PreScalerSet& set);

struct RoundOutcome {
  std::vector<std::uint8_t> transmitted;   // chi_m
  std::vector<double> g_hat;               // post-scaled gradient estimate
  std::vector<double> energy_per_symbol;   // ||x_m||^2 / d for transmitters
  bool skipped = false;                    // round dropped (no update)
};

// One aggregation round. Channel inversion makes the signal term real, so
// the estimate is (sum_m chi_m gamma_m g_m + z) / alpha with z the real
// receiver noise vector (variance N_0 per dimension). Gradient norms above
// G_max are a configuration error and throw.
RoundOutcome ota_round(std::span<const std::vector<double>> gradients,
                       std::span<const std::complex<double>> fading,
                       std::span<const double> noise, const PreScalerSet& set);

// Conditional estimation-error variance split into its two sources.
struct ErrorVariance {
  double transmission = 0.0;
  double noise = 0.0;
  double total() const { return transmission + noise; }
};

// Exact form: uses the actual per-device gradient norms.
ErrorVariance error_variance_exact(const PreScalerSet& set,
                                   std::span<const std::vector<double>> gradients,
                                   double noise_psd);

// Bounded form (the sigma^2 the convergence bound consumes): gradient
// norms replaced by G_max.
ErrorVariance error_variance_bound(const PreScalerSet& set, double noise_psd);

}  // namespace otafl::ota
