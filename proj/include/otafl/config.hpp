#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "otafl/design.hpp"
#include "otafl/model.hpp"
#include "otafl/wireless.hpp"

namespace otafl::harness {

struct DataConfig {
  enum class Source { Synthetic, MnistIdx };
  Source source = Source::Synthetic;
  model::SyntheticSpec synthetic;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  int samples_per_class = 10;
  int test_size = 1000;
};

struct ExperimentConfig {
  wireless::RadioConfig radio;
  std::size_t num_devices = 10;
  DataConfig data;
  double reg = 0.01;
  double budget_ms = 4000.0;
  double eta = 0.0;              // 0 selects grid search
  std::vector<double> eta_grid;  // empty selects the default log-spaced grid
  design::PolicySpec policy;
  int replicates = 50;
  int tuning_replicates = 5;  // replicates per grid point during search
  std::uint64_t seed = 1;
  int log_every = 5;
  double gmax_safety = 1.5;
  double minimizer_tol = 1e-8;
  int probe_steps = 50;
  std::optional<std::string> deployment_file;
  wireless::DiskSampling disk_sampling = wireless::DiskSampling::UniformArea;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Parse a config file by extension: .json, or .toml (flat keys, [section]
// tables, scalar and array values).
nlohmann::json load_config_file(const std::string& path);
ExperimentConfig load_config(const std::string& path);

}  // namespace otafl::harness
