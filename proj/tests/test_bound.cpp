#include "doctest.h"

#include <cmath>
#include <vector>

#include "otafl/bound.hpp"
#include "otafl/design.hpp"
#include "otafl/ota.hpp"
#include "otafl/wireless.hpp"
#include "support.hpp"

using namespace otafl;
using bound::BoundConstants;

namespace {

wireless::Deployment fixed_deployment(const std::vector<double>& distances) {
  wireless::RadioConfig radio;
  wireless::Deployment d;
  d.r_max_m = radio.r_max_m;
  for (double r : distances)
    d.sites.push_back({r, 0.0, r, wireless::path_loss_linear(r, radio)});
  return d;
}

BoundConstants constants_for(const ota::PreScalerSet& set, double eta) {
  BoundConstants c;
  c.num_devices = set.size();
  c.dim = set.dim;
  c.g_max = set.g_max;
  c.kappa = 2.5;
  c.energy_per_sample = set.energy_per_sample;
  c.noise_psd = 4e-21;
  c.eta = eta;
  c.mu_tilde = 0.01;
  c.l_tilde = 80.0;
  c.mu_bar = 0.01;
  c.l_bar = 80.0;
  c.e0 = 900.0;
  c.e0_tilde = 961.0;
  c.e0_tilde_solved = true;
  return c;
}

}  // namespace

TEST_CASE("stepsize limit") {
  BoundConstants c;
  c.mu_tilde = 1.0;
  c.l_tilde = 1.0;
  CHECK(bound::stepsize_limit(c) == 1.0);
  c.mu_tilde = 0.01;
  c.l_tilde = 99.99;
  CHECK(bound::stepsize_limit(c) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("optimality-error bound") {
  const auto d = fixed_deployment({25.0, 90.0, 155.0, 190.0});
  const auto set = design::min_variance_prescalers(d, 512, 1e-7, 10.0);
  const double eta = 0.01;
  auto c = constants_for(set, eta);

  SUBCASE("terms and total") {
    const auto b = bound::optimality_error_bound(0, c, set);
    CHECK(b.initialization == doctest::Approx(std::sqrt(c.e0_tilde)));
    const auto var = ota::error_variance_bound(set, c.noise_psd);
    CHECK(b.transmission_variance == var.transmission);
    CHECK(b.noise_variance == var.noise);
    CHECK(b.total ==
          doctest::Approx(b.initialization + b.model_bias +
                          std::sqrt(eta / c.mu_tilde * var.total())));
  }

  SUBCASE("the initialization term dies off geometrically") {
    const auto late = bound::optimality_error_bound(2000000, c, set);
    const auto var = ota::error_variance_bound(set, c.noise_psd);
    CHECK(late.initialization <= 1e-30);
    CHECK(late.total == doctest::Approx(late.model_bias +
                                        std::sqrt(eta / c.mu_tilde * var.total())));
  }

  SUBCASE("total is non-increasing in t") {
    double prev = bound::optimality_error_bound(0, c, set).total;
    for (std::size_t t : {1u, 2u, 5u, 10u, 50u, 200u, 1000u}) {
      const double cur = bound::optimality_error_bound(t, c, set).total;
      CHECK(cur <= prev);
      prev = cur;
    }
  }

  SUBCASE("uniform participation zeroes the bias term") {
    const auto zb = design::zero_bias_prescalers(d, 512, 1e-7, 10.0);
    const auto b = bound::optimality_error_bound(10, c, zb);
    CHECK(b.model_bias <= 1e-9 * c.num_devices * c.kappa / c.mu_tilde);
  }

  SUBCASE("zero kappa zeroes the bias term for any participation") {
    auto c0 = c;
    c0.kappa = 0.0;
    const auto b = bound::optimality_error_bound(10, c0, set);
    CHECK(b.model_bias == 0.0);
  }

  SUBCASE("zero noise psd zeroes only the noise term") {
    auto c0 = c;
    c0.noise_psd = 0.0;
    const auto with_noise = bound::optimality_error_bound(10, c, set);
    const auto without = bound::optimality_error_bound(10, c0, set);
    CHECK(without.noise_variance == 0.0);
    CHECK(without.transmission_variance == with_noise.transmission_variance);
    CHECK(without.model_bias == with_noise.model_bias);
    CHECK(without.initialization == with_noise.initialization);
  }

  SUBCASE("stepsizes outside the admissible range are rejected") {
    auto bad = c;
    bad.eta = 2.1 / (c.mu_tilde + c.l_tilde);
    CHECK_THROWS_AS(bound::optimality_error_bound(10, bad, set), std::invalid_argument);
    bad.eta = -1e-9;
    CHECK_THROWS_AS(bound::optimality_error_bound(10, bad, set), std::invalid_argument);
    // the limit itself is admissible
    auto edge = c;
    edge.eta = bound::stepsize_limit(c);
    CHECK_NOTHROW(bound::optimality_error_bound(10, edge, set));
  }

  SUBCASE("constants are validated") {
    auto bad = c;
    bad.mu_tilde = 2.0;
    bad.l_tilde = 1.0;  // mu~ > L~
    CHECK_THROWS_AS(bound::optimality_error_bound(10, bad, set), std::invalid_argument);
  }
}

TEST_CASE("model bias bound") {
  BoundConstants c;
  c.num_devices = 10;
  c.kappa = 1.7;
  c.mu_tilde = 0.01;

  SUBCASE("uniform participation has zero bias") {
    std::vector<double> p(10, 0.1);
    CHECK(bound::model_bias_bound(c, p) == 0.0);
  }

  SUBCASE("one-hot participation attains the maximal deviation") {
    std::vector<double> p(10, 0.0);
    p[3] = 1.0;
    CHECK(bound::model_bias_bound(c, p) ==
          doctest::Approx(9.0 * c.kappa / c.mu_tilde).epsilon(1e-12));
  }
}

TEST_CASE("sigma squared is the shared variance-bound implementation") {
  const auto d = fixed_deployment({40.0, 120.0});
  const auto set = design::min_variance_prescalers(d, 256, 1e-7, 5.0);
  auto c = constants_for(set, 1e-3);
  const auto a = bound::sigma_squared(set, c);
  const auto b = ota::error_variance_bound(set, c.noise_psd);
  CHECK(a.transmission == b.transmission);
  CHECK(a.noise == b.noise);
  CHECK(a.total() == b.total());
}
