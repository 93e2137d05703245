#include "otafl/bound.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace otafl::bound {

void BoundConstants::validate() const {
  if (num_devices == 0 || dim == 0)
    throw std::invalid_argument("BoundConstants: empty system");
  if (!(mu_tilde > 0.0) || !(l_tilde > 0.0) || mu_tilde > l_tilde + 1e-12)
    throw std::invalid_argument("BoundConstants: need 0 < mu~ <= L~");
  if (kappa < 0.0 || g_max <= 0.0 || energy_per_sample <= 0.0 || noise_psd < 0.0)
    throw std::invalid_argument("BoundConstants: invalid constants");
  if (e0 < 0.0 || e0_tilde < 0.0)
    throw std::invalid_argument("BoundConstants: negative initial error");
}

double stepsize_limit(const BoundConstants& constants) {
  return 2.0 / (constants.mu_tilde + constants.l_tilde);
}

double model_bias_bound(const BoundConstants& constants,
                        std::span<const double> participation) {
  if (participation.size() != constants.num_devices)
    throw std::invalid_argument("model_bias_bound: participation size mismatch");
  const double n = static_cast<double>(constants.num_devices);
  double max_dev = 0.0;
  for (double p : participation)
    max_dev = std::max(max_dev, std::abs(1.0 / n - p));
  return n * constants.kappa / constants.mu_tilde * max_dev;
}

ota::ErrorVariance sigma_squared(const ota::PreScalerSet& set,
                                 const BoundConstants& constants) {
  return ota::error_variance_bound(set, constants.noise_psd);
}

BoundBreakdown optimality_error_bound(std::size_t t, const BoundConstants& constants,
                              const ota::PreScalerSet& set) {
  constants.validate();
  if (set.size() != constants.num_devices)
    throw std::invalid_argument("optimality_error_bound: device count mismatch");
  const double limit = stepsize_limit(constants);
  if (constants.eta < 0.0 || constants.eta > limit)
    throw std::invalid_argument("optimality_error_bound: stepsize " +
                                std::to_string(constants.eta) +
                                " outside [0, " + std::to_string(limit) + "]");

  BoundBreakdown b;
  const double contraction = 1.0 - constants.eta * constants.mu_tilde;
  b.initialization = std::pow(contraction, double(t)) * std::sqrt(constants.e0_tilde);
  b.model_bias = model_bias_bound(constants, set.participation);
  const auto var = sigma_squared(set, constants);
  b.transmission_variance = var.transmission;
  b.noise_variance = var.noise;
  b.total = b.initialization + b.model_bias +
            std::sqrt(constants.eta / constants.mu_tilde * var.total());
  return b;
}

}  // namespace otafl::bound
