#include "otafl/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace otafl::design {

namespace {

const double kInvE = std::exp(-1.0);

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_gradient_norms(std::span<const std::vector<double>> gradients,
                          std::size_t dim, double g_max) {
  for (std::size_t m = 0; m < gradients.size(); ++m) {
    if (gradients[m].size() != dim)
      throw std::invalid_argument("round: gradient dimension mismatch");
    if (squared_norm(gradients[m]) > g_max * g_max)
      throw std::runtime_error("round: gradient norm of device " +
                               std::to_string(m) + " exceeds G_max " +
                               std::to_string(g_max) +
                               " (G_max was underestimated)");
  }
}

}  // namespace

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::MinVariance: return "min_variance";
    case PolicyKind::ZeroBias: return "zero_bias";
    case PolicyKind::VanillaOta: return "vanilla_ota";
    case PolicyKind::BbflInterior: return "bbfl_interior";
    case PolicyKind::BbflAlternating: return "bbfl_alternating";
    case PolicyKind::Ideal: return "ideal";
  }
  throw std::logic_error("unknown policy kind");
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "min_variance") return PolicyKind::MinVariance;
  if (name == "zero_bias") return PolicyKind::ZeroBias;
  if (name == "vanilla_ota" || name == "vanilla") return PolicyKind::VanillaOta;
  if (name == "bbfl_interior") return PolicyKind::BbflInterior;
  if (name == "bbfl_alternating") return PolicyKind::BbflAlternating;
  if (name == "ideal") return PolicyKind::Ideal;
  throw std::invalid_argument("unknown policy: " + std::string(name));
}

ota::PreScalerSet min_variance_prescalers(const wireless::Deployment& deployment,
                                          std::size_t dim,
                                          double energy_per_sample, double g_max) {
  if (deployment.size() == 0)
    throw std::invalid_argument("min_variance_prescalers: empty deployment");
  if (dim == 0 || energy_per_sample <= 0.0 || g_max <= 0.0)
    throw std::invalid_argument("min_variance_prescalers: invalid parameters");
  std::vector<double> gammas;
  gammas.reserve(deployment.size());
  for (const auto& site : deployment.sites)
    gammas.push_back(std::sqrt(double(dim) * site.path_loss * energy_per_sample /
                               (2.0 * g_max * g_max)));
  return ota::PreScalerSet::from_gammas(std::move(gammas),
                                        deployment.path_losses(), dim,
                                        energy_per_sample, g_max);
}

double lambert_w0(double x) {
  if (std::isnan(x)) throw std::domain_error("lambert_w0: NaN input");
  if (x < -kInvE) throw std::domain_error("lambert_w0: x below -1/e");
  if (x == -kInvE) return -1.0;
  if (x == 0.0) return 0.0;

  double w;
  if (x < -0.25) {
    // series around the branch point; the radicand can round below zero
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0)));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    w = std::log1p(x);
  }

  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    if (!std::isfinite(denom) || denom == 0.0) break;
    const double step = f / denom;
    w -= step;
    if (w < -1.0) w = -1.0;  // keep on the principal branch
    if (std::abs(step) <= 1e-14) break;
  }
  return w;
}

ota::PreScalerSet zero_bias_prescalers(const wireless::Deployment& deployment,
                                       std::size_t dim, double energy_per_sample,
                                       double g_max) {
  if (deployment.size() == 0)
    throw std::invalid_argument("zero_bias_prescalers: empty deployment");
  if (dim == 0 || energy_per_sample <= 0.0 || g_max <= 0.0)
    throw std::invalid_argument("zero_bias_prescalers: invalid parameters");

  // target: the worst device's alpha_m at its own maximizer
  double target = std::numeric_limits<double>::infinity();
  for (const auto& site : deployment.sites) {
    const double gamma_opt = std::sqrt(double(dim) * site.path_loss *
                                       energy_per_sample / (2.0 * g_max * g_max));
    target = std::min(target, gamma_opt * std::exp(-0.5));
  }

  std::vector<double> gammas;
  gammas.reserve(deployment.size());
  for (const auto& site : deployment.sites) {
    const double c =
        g_max * g_max / (double(dim) * site.path_loss * energy_per_sample);
    // gamma e^{-c gamma^2} = target  <=>  u e^{-u} = 2 c target^2, u = 2 c gamma^2;
    // the W0 branch picks the smaller gamma root
    double arg = -2.0 * c * target * target;
    if (arg < -kInvE) {
      if (arg < -kInvE * (1.0 + 1e-12))
        throw std::runtime_error(
            "zero_bias_prescalers: target alpha infeasible for a device");
      arg = -kInvE;
    }
    const double u = -lambert_w0(arg);
    gammas.push_back(std::sqrt(u / (2.0 * c)));
  }
  return ota::PreScalerSet::from_gammas(std::move(gammas),
                                        deployment.path_losses(), dim,
                                        energy_per_sample, g_max);
}

ota::RoundOutcome vanilla_ota_round(std::span<const std::vector<double>> gradients,
                                    std::span<const std::complex<double>> fading,
                                    std::span<const double> noise, std::size_t dim,
                                    double energy_per_sample, double g_max) {
  std::vector<std::size_t> everyone(gradients.size());
  for (std::size_t m = 0; m < everyone.size(); ++m) everyone[m] = m;
  return subset_vanilla_round(gradients, fading, noise, everyone, dim,
                              energy_per_sample, g_max);
}

ota::RoundOutcome subset_vanilla_round(std::span<const std::vector<double>> gradients,
                                       std::span<const std::complex<double>> fading,
                                       std::span<const double> noise,
                                       std::span<const std::size_t> members,
                                       std::size_t dim, double energy_per_sample,
                                       double g_max) {
  if (gradients.size() != fading.size())
    throw std::invalid_argument("round: device count mismatch");
  if (noise.size() != dim)
    throw std::invalid_argument("round: noise dimension mismatch");
  if (members.empty())
    throw std::invalid_argument("round: empty device subset");
  check_gradient_norms(gradients, dim, g_max);

  ota::RoundOutcome out;
  out.transmitted.assign(gradients.size(), 0);
  out.energy_per_symbol.assign(gradients.size(), 0.0);
  out.g_hat.assign(dim, 0.0);

  // every member transmits at the largest common scaler the worst current
  // channel can afford
  double gamma_t = std::numeric_limits<double>::infinity();
  for (std::size_t m : members) {
    const double h_mag = std::abs(fading[m]);
    if (h_mag == 0.0) {
      out.skipped = true;
      return out;
    }
    gamma_t = std::min(gamma_t,
                       std::sqrt(double(dim) * energy_per_sample) * h_mag / g_max);
  }

  const double inv_count = 1.0 / members.size();
  for (std::size_t m : members) {
    out.transmitted[m] = 1;
    const double h_sq = std::norm(fading[m]);
    out.energy_per_symbol[m] =
        gamma_t * gamma_t * squared_norm(gradients[m]) / (double(dim) * h_sq);
    const auto& g = gradients[m];
    for (std::size_t j = 0; j < dim; ++j) out.g_hat[j] += inv_count * g[j];
  }
  const double noise_scale = inv_count / gamma_t;
  for (std::size_t j = 0; j < dim; ++j) out.g_hat[j] += noise_scale * noise[j];
  return out;
}

std::vector<std::size_t> interior_devices(const wireless::Deployment& deployment,
                                          double r_in) {
  if (r_in <= 0.0) throw std::invalid_argument("interior radius must be > 0");
  std::vector<std::size_t> members;
  for (std::size_t m = 0; m < deployment.size(); ++m)
    if (deployment.sites[m].distance_m <= r_in) members.push_back(m);
  return members;
}

namespace {

class PrescaledOtaPolicy final : public RoundPolicy {
 public:
  PrescaledOtaPolicy(std::string name, ota::PreScalerSet set)
      : name_(std::move(name)), set_(std::move(set)) {}

  std::string_view name() const override { return name_; }

  ota::RoundOutcome round(const RoundContext& ctx) override {
    return ota::ota_round(ctx.gradients, ctx.fading, ctx.noise, set_);
  }

  double transmit_weight(std::size_t device,
                         const ota::RoundOutcome&) const override {
    return set_.gamma[device] / set_.alpha;
  }

  const ota::PreScalerSet* prescalers() const override { return &set_; }

 private:
  std::string name_;
  ota::PreScalerSet set_;
};

class VanillaOtaPolicy final : public RoundPolicy {
 public:
  VanillaOtaPolicy(std::size_t dim, double energy_per_sample, double g_max)
      : dim_(dim), energy_per_sample_(energy_per_sample), g_max_(g_max) {}

  std::string_view name() const override { return "vanilla_ota"; }

  ota::RoundOutcome round(const RoundContext& ctx) override {
    return vanilla_ota_round(ctx.gradients, ctx.fading, ctx.noise, dim_,
                             energy_per_sample_, g_max_);
  }

  double transmit_weight(std::size_t,
                         const ota::RoundOutcome& outcome) const override {
    std::size_t count = 0;
    for (auto t : outcome.transmitted) count += t;
    return count ? 1.0 / count : 0.0;
  }

 private:
  std::size_t dim_;
  double energy_per_sample_;
  double g_max_;
};

class BbflInteriorPolicy final : public RoundPolicy {
 public:
  BbflInteriorPolicy(std::vector<std::size_t> members, std::size_t dim,
                     double energy_per_sample, double g_max)
      : members_(std::move(members)),
        dim_(dim),
        energy_per_sample_(energy_per_sample),
        g_max_(g_max) {
    if (members_.empty())
      throw std::invalid_argument("bbfl_interior: no devices inside R_in");
  }

  std::string_view name() const override { return "bbfl_interior"; }

  ota::RoundOutcome round(const RoundContext& ctx) override {
    return subset_vanilla_round(ctx.gradients, ctx.fading, ctx.noise, members_,
                                dim_, energy_per_sample_, g_max_);
  }

  double transmit_weight(std::size_t,
                         const ota::RoundOutcome& outcome) const override {
    std::size_t count = 0;
    for (auto t : outcome.transmitted) count += t;
    return count ? 1.0 / count : 0.0;
  }

 private:
  std::vector<std::size_t> members_;
  std::size_t dim_;
  double energy_per_sample_;
  double g_max_;
};

class BbflAlternatingPolicy final : public RoundPolicy {
 public:
  BbflAlternatingPolicy(std::vector<std::size_t> members, double mix_probability,
                        std::size_t dim, double energy_per_sample, double g_max)
      : members_(std::move(members)),
        mix_probability_(mix_probability),
        dim_(dim),
        energy_per_sample_(energy_per_sample),
        g_max_(g_max) {
    if (members_.empty())
      throw std::invalid_argument("bbfl_alternating: no devices inside R_in");
    if (mix_probability_ < 0.0 || mix_probability_ > 1.0)
      throw std::invalid_argument("bbfl_alternating: mix probability outside [0,1]");
  }

  std::string_view name() const override { return "bbfl_alternating"; }

  ota::RoundOutcome round(const RoundContext& ctx) override {
    if (ctx.policy_rng == nullptr)
      throw std::invalid_argument("bbfl_alternating: missing policy rng");
    if (ctx.policy_rng->uniform() < mix_probability_)
      return vanilla_ota_round(ctx.gradients, ctx.fading, ctx.noise, dim_,
                               energy_per_sample_, g_max_);
    return subset_vanilla_round(ctx.gradients, ctx.fading, ctx.noise, members_,
                                dim_, energy_per_sample_, g_max_);
  }

  double transmit_weight(std::size_t,
                         const ota::RoundOutcome& outcome) const override {
    std::size_t count = 0;
    for (auto t : outcome.transmitted) count += t;
    return count ? 1.0 / count : 0.0;
  }

 private:
  std::vector<std::size_t> members_;
  double mix_probability_;
  std::size_t dim_;
  double energy_per_sample_;
  double g_max_;
};

class IdealPolicy final : public RoundPolicy {
 public:
  explicit IdealPolicy(std::size_t dim) : dim_(dim) {}

  std::string_view name() const override { return "ideal"; }

  ota::RoundOutcome round(const RoundContext& ctx) override {
    ota::RoundOutcome out;
    out.transmitted.assign(ctx.gradients.size(), 1);
    out.energy_per_symbol.assign(ctx.gradients.size(), 0.0);
    out.g_hat.assign(dim_, 0.0);
    const double inv_n = 1.0 / ctx.gradients.size();
    for (const auto& g : ctx.gradients)
      for (std::size_t j = 0; j < dim_; ++j) out.g_hat[j] += inv_n * g[j];
    return out;
  }

  double transmit_weight(std::size_t,
                         const ota::RoundOutcome& outcome) const override {
    return 1.0 / outcome.transmitted.size();
  }

 private:
  std::size_t dim_;
};

}  // namespace

std::unique_ptr<RoundPolicy> make_policy(const PolicySpec& spec,
                                         const wireless::Deployment& deployment,
                                         std::size_t dim, double energy_per_sample,
                                         double g_max) {
  switch (spec.kind) {
    case PolicyKind::MinVariance:
      return std::make_unique<PrescaledOtaPolicy>(
          "min_variance",
          min_variance_prescalers(deployment, dim, energy_per_sample, g_max));
    case PolicyKind::ZeroBias:
      return std::make_unique<PrescaledOtaPolicy>(
          "zero_bias",
          zero_bias_prescalers(deployment, dim, energy_per_sample, g_max));
    case PolicyKind::VanillaOta:
      return std::make_unique<VanillaOtaPolicy>(dim, energy_per_sample, g_max);
    case PolicyKind::BbflInterior:
      return std::make_unique<BbflInteriorPolicy>(
          interior_devices(deployment, spec.r_in_fraction * deployment.r_max_m),
          dim, energy_per_sample, g_max);
    case PolicyKind::BbflAlternating:
      return std::make_unique<BbflAlternatingPolicy>(
          interior_devices(deployment, spec.r_in_fraction * deployment.r_max_m),
          spec.mix_probability, dim, energy_per_sample, g_max);
    case PolicyKind::Ideal:
      return std::make_unique<IdealPolicy>(dim);
  }
  throw std::logic_error("unknown policy kind");
}

}  // namespace otafl::design
