#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otafl/ota.hpp"
#include "otafl/random.hpp"
#include "otafl/wireless.hpp"

namespace otafl::design {

enum class PolicyKind {
  MinVariance,
  ZeroBias,
  VanillaOta,
  BbflInterior,
  BbflAlternating,
  Ideal,  // noiseless exact aggregation, reference mode
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::MinVariance;
  double r_in_fraction = 0.6;    // BB-FL interior radius as a fraction of r_max
  double mix_probability = 0.5;  // BB-FL alternating: P(schedule every device)
};

std::string policy_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

// gamma_m = sqrt(d Lambda_m E_s / (2 G_max^2)): each device sits at the
// maximizer of its alpha_m, which maximizes alpha and hence minimizes the
// post-scaled noise variance. Every transmit probability is exp(-1/2).
ota::PreScalerSet min_variance_prescalers(const wireless::Deployment& deployment,
                                          std::size_t dim,
                                          double energy_per_sample, double g_max);

// Principal branch of the Lambert W function (W e^W = x, W >= -1) on
// [-1/e, inf). Halley iteration to 1e-14 absolute.
double lambert_w0(double x);

// Equalize alpha_m across devices at the largest feasible common value,
// the alpha_m of the worst-path-loss device at its own maximizer. Solved
// per device through the W0 branch, which picks the smaller gamma root.
ota::PreScalerSet zero_bias_prescalers(const wireless::Deployment& deployment,
                                       std::size_t dim, double energy_per_sample,
                                       double g_max);

// One round of the instantaneous zero-bias baseline: a common per-round
// scaler limited by the worst current channel, full participation, exact
// channel inversion, estimate y / (N gamma_t). A zero channel magnitude
// (probability-zero event) marks the round skipped.
ota::RoundOutcome vanilla_ota_round(std::span<const std::vector<double>> gradients,
                                    std::span<const std::complex<double>> fading,
                                    std::span<const double> noise, std::size_t dim,
                                    double energy_per_sample, double g_max);

// Vanilla round restricted to a device subset; the post-scaler uses the
// subset size.
ota::RoundOutcome subset_vanilla_round(std::span<const std::vector<double>> gradients,
                                       std::span<const std::complex<double>> fading,
                                       std::span<const double> noise,
                                       std::span<const std::size_t> members,
                                       std::size_t dim, double energy_per_sample,
                                       double g_max);

std::vector<std::size_t> interior_devices(const wireless::Deployment& deployment,
                                          double r_in);

// What a policy consumes each round. Fading and noise come from streams
// shared across policies (common random numbers); policy_rng carries any
// policy-private randomness (e.g. the alternating schedule).
struct RoundContext {
  std::span<const std::vector<double>> gradients;
  std::span<const std::complex<double>> fading;
  std::span<const double> noise;
  rng::RandomStream* policy_rng = nullptr;
};

class RoundPolicy {
 public:
  virtual ~RoundPolicy() = default;
  virtual std::string_view name() const = 0;
  virtual ota::RoundOutcome round(const RoundContext& ctx) = 0;
  // participation weight a transmitting device carries, relative to alpha
  // (used for the empirical participation-level trace)
  virtual double transmit_weight(std::size_t device,
                                 const ota::RoundOutcome& outcome) const = 0;
  // design-time pre-scaler set, when the policy has one
  virtual const ota::PreScalerSet* prescalers() const { return nullptr; }
};

std::unique_ptr<RoundPolicy> make_policy(const PolicySpec& spec,
                                         const wireless::Deployment& deployment,
                                         std::size_t dim, double energy_per_sample,
                                         double g_max);

}  // namespace otafl::design
