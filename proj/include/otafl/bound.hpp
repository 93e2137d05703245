#pragma once

#include <cstddef>
#include <span>

#include "otafl/ota.hpp"

namespace otafl::bound {

// Everything the optimality-error bound consumes. The weighted constants
// (mu_tilde, l_tilde) belong to the participation-weighted objective; the
// unweighted pair is kept alongside for reporting.
struct BoundConstants {
  std::size_t num_devices = 0;
  std::size_t dim = 0;
  double g_max = 0.0;
  double kappa = 0.0;
  double energy_per_sample = 0.0;
  double noise_psd = 0.0;
  double eta = 0.0;
  double mu_tilde = 0.0;
  double l_tilde = 0.0;
  double mu_bar = 0.0;  // (1/N) sum mu_m
  double l_bar = 0.0;   // (1/N) sum L_m
  double e0 = 0.0;        // ||w_0 - w*||^2
  double e0_tilde = 0.0;  // ||w_0 - w~||^2
  bool e0_tilde_solved = false;  // false: triangle-inequality fallback

  void validate() const;
};

struct BoundBreakdown {
  double initialization = 0.0;
  double model_bias = 0.0;
  double transmission_variance = 0.0;  // sigma^2 addend, pre square root
  double noise_variance = 0.0;         // sigma^2 addend, pre square root
  double total = 0.0;
};

// Largest admissible fixed stepsize, 2 / (mu_tilde + l_tilde).
double stepsize_limit(const BoundConstants& constants);

// Optimality-error bound after t rounds:
//   (1 - eta mu~)^t sqrt(E~_0) + (N kappa / mu~) max_m |1/N - p_m|
//     + sqrt( (eta / mu~) (transmission + noise variance) ).
// Throws if eta lies outside [0, 2/(mu~ + L~)].
BoundBreakdown optimality_error_bound(std::size_t t, const BoundConstants& constants,
                              const ota::PreScalerSet& set);

// ||w~ - w*|| <= (N kappa / mu~) max_m |1/N - p_m|
double model_bias_bound(const BoundConstants& constants,
                        std::span<const double> participation);

// The G_max-bounded error variance, shared with the ota module so the two
// report identical numbers.
ota::ErrorVariance sigma_squared(const ota::PreScalerSet& set,
                                 const BoundConstants& constants);

}  // namespace otafl::bound
