#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "otafl/random.hpp"

#include "json.hpp"

namespace otafl::wireless {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double ratio);

// Uplink radio parameters. Carrier frequency is recorded for completeness
// but plays no role: the reference loss at 1 m already fixes the absolute
// path-loss level.
struct RadioConfig {
  double bandwidth_hz = 1e6;
  double carrier_hz = 2.4e9;
  double tx_power_w = 0.1;                          // 20 dBm
  double noise_psd = 3.9810717055349695e-21;        // -174 dBm/Hz, W/Hz
  double pathloss_exponent = 2.2;
  double ref_loss_db = 40.0;                        // at 1 m
  double r_max_m = 200.0;

  // energy per channel use = power x symbol duration 1/B
  double energy_per_sample() const { return tx_power_w / bandwidth_hz; }

  void validate() const;  // throws std::invalid_argument
};

// Log-distance path loss as a linear power gain.
double path_loss_linear(double r_m, const RadioConfig& cfg);

struct DeviceSite {
  double x_m = 0.0;
  double y_m = 0.0;
  double distance_m = 0.0;
  double path_loss = 0.0;  // linear gain
};

struct Deployment {
  std::vector<DeviceSite> sites;
  double r_max_m = 0.0;

  std::size_t size() const { return sites.size(); }
  std::vector<double> path_losses() const;

  nlohmann::json to_json() const;
  static Deployment from_json(const nlohmann::json& j);
  static Deployment load(const std::string& path);
  void save(const std::string& path) const;
};

enum class DiskSampling {
  UniformArea,    // uniform over the disk (r = r_max * sqrt(U))
  UniformRadius,  // uniform in radius, kept for sensitivity checks
};

// Devices i.i.d. on a disk of radius cfg.r_max_m around the receiver,
// distance floored at the 1 m path-loss reference.
Deployment deploy_uniform_disk(std::size_t n, const RadioConfig& cfg,
                               rng::RandomStream& stream,
                               DiskSampling sampling = DiskSampling::UniformArea);

// One Rayleigh flat-fading coefficient per device, E[|h|^2] = path loss.
std::vector<std::complex<double>> draw_fading(const Deployment& deployment,
                                              rng::RandomStream& stream);

// Receiver noise with E[|z_i|^2] = noise_psd per complex entry.
std::vector<std::complex<double>> draw_noise(std::size_t dim, double noise_psd,
                                             rng::RandomStream& stream);

// Real aggregation noise, variance noise_psd per dimension. This is the
// noise the gradient estimator sees: the channel-inverted sum is real and
// the post-scaled noise power works out to dim * noise_psd / alpha^2.
std::vector<double> draw_noise_real(std::size_t dim, double noise_psd,
                                    rng::RandomStream& stream);

}  // namespace otafl::wireless
