#include "otafl/wireless.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace otafl::wireless {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

void RadioConfig::validate() const {
  if (bandwidth_hz <= 0 || carrier_hz <= 0 || tx_power_w <= 0 ||
      noise_psd <= 0 || pathloss_exponent <= 0 || ref_loss_db <= 0 ||
      r_max_m <= 0) {
    throw std::invalid_argument("RadioConfig: all parameters must be positive");
  }
}

double path_loss_linear(double r_m, const RadioConfig& cfg) {
  if (r_m <= 0.0) throw std::invalid_argument("path_loss_linear: r must be > 0");
  const double pl_db = cfg.ref_loss_db + 10.0 * cfg.pathloss_exponent * std::log10(r_m);
  return std::pow(10.0, -pl_db / 10.0);
}

std::vector<double> Deployment::path_losses() const {
  std::vector<double> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(s.path_loss);
  return out;
}

nlohmann::json Deployment::to_json() const {
  nlohmann::json j;
  j["r_max_m"] = r_max_m;
  j["sites"] = nlohmann::json::array();
  for (const auto& s : sites) {
    j["sites"].push_back({{"x_m", s.x_m},
                          {"y_m", s.y_m},
                          {"distance_m", s.distance_m},
                          {"path_loss", s.path_loss}});
  }
  return j;
}

Deployment Deployment::from_json(const nlohmann::json& j) {
  Deployment d;
  d.r_max_m = j.at("r_max_m").get<double>();
  for (const auto& js : j.at("sites")) {
    DeviceSite s;
    s.x_m = js.at("x_m").get<double>();
    s.y_m = js.at("y_m").get<double>();
    s.distance_m = js.at("distance_m").get<double>();
    s.path_loss = js.at("path_loss").get<double>();
    if (s.distance_m <= 0.0 || s.distance_m > d.r_max_m)
      throw std::invalid_argument("Deployment: distance outside (0, r_max]");
    if (s.path_loss <= 0.0)
      throw std::invalid_argument("Deployment: path loss must be positive");
    d.sites.push_back(s);
  }
  return d;
}

Deployment Deployment::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Deployment::load: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void Deployment::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Deployment::save: cannot open " + path);
  out << to_json().dump(2) << "\n";
}

Deployment deploy_uniform_disk(std::size_t n, const RadioConfig& cfg,
                               rng::RandomStream& stream, DiskSampling sampling) {
  cfg.validate();
  Deployment d;
  d.r_max_m = cfg.r_max_m;
  d.sites.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double u = stream.uniform();
    double r = sampling == DiskSampling::UniformArea ? cfg.r_max_m * std::sqrt(u)
                                                     : cfg.r_max_m * u;
    // keep devices at or beyond the 1 m reference distance
    r = std::max(r, 1.0);
    const double theta = 2.0 * std::numbers::pi * stream.uniform();
    DeviceSite s;
    s.x_m = r * std::cos(theta);
    s.y_m = r * std::sin(theta);
    s.distance_m = r;
    s.path_loss = path_loss_linear(r, cfg);
    d.sites.push_back(s);
  }
  return d;
}

std::vector<std::complex<double>> draw_fading(const Deployment& deployment,
                                              rng::RandomStream& stream) {
  std::vector<std::complex<double>> h;
  h.reserve(deployment.size());
  for (const auto& site : deployment.sites) {
    if (site.path_loss <= 0.0)
      throw std::invalid_argument("draw_fading: path loss must be positive");
    const double scale = std::sqrt(site.path_loss / 2.0);
    const double re = scale * stream.normal();
    const double im = scale * stream.normal();
    h.emplace_back(re, im);
  }
  return h;
}

std::vector<std::complex<double>> draw_noise(std::size_t dim, double noise_psd,
                                             rng::RandomStream& stream) {
  if (noise_psd < 0.0)
    throw std::invalid_argument("draw_noise: noise psd must be >= 0");
  std::vector<std::complex<double>> z;
  z.reserve(dim);
  const double scale = std::sqrt(noise_psd / 2.0);
  for (std::size_t i = 0; i < dim; ++i) {
    const double re = scale * stream.normal();
    const double im = scale * stream.normal();
    z.emplace_back(re, im);
  }
  return z;
}

std::vector<double> draw_noise_real(std::size_t dim, double noise_psd,
                                    rng::RandomStream& stream) {
  if (noise_psd < 0.0)
    throw std::invalid_argument("draw_noise_real: noise psd must be >= 0");
  std::vector<double> z(dim);
  const double scale = std::sqrt(noise_psd);
  for (auto& v : z) v = scale * stream.normal();
  return z;
}

}  // namespace otafl::wireless
