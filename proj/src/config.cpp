#include "otafl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace otafl::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

// strip a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

nlohmann::json parse_toml_scalar(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() >= 2 && t.front() == '\'' && t.back() == '\'')
    return t.substr(1, t.size() - 2);
  // JSON grammar covers TOML numbers, booleans, quoted strings and arrays
  // of the same; bare words fall back to strings
  try {
    return nlohmann::json::parse(t);
  } catch (const nlohmann::json::parse_error&) {
    return t;
  }
}

nlohmann::json parse_mini_toml(std::istream& in, const std::string& path) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed table header");
      std::string name = trim(line.substr(1, line.size() - 2));
      table = &root;
      std::stringstream parts(name);
      std::string key;
      while (std::getline(parts, key, '.')) {
        key = trim(key);
        if (key.empty())
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": empty table name component");
        table = &(*table)[key];
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    (*table)[key] = parse_toml_scalar(line.substr(eq + 1));
  }
  return root;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  if (has_suffix(path, ".json")) {
    nlohmann::json j;
    in >> j;
    return j;
  }
  if (has_suffix(path, ".toml")) return parse_mini_toml(in, path);
  throw std::runtime_error("unsupported config extension (use .json or .toml): " +
                           path);
}

ExperimentConfig load_config(const std::string& path) {
  return ExperimentConfig::from_json(load_config_file(path));
}

void ExperimentConfig::validate() const {
  radio.validate();
  if (num_devices == 0) throw std::invalid_argument("num_devices must be >= 1");
  if (budget_ms <= 0.0) throw std::invalid_argument("budget_ms must be > 0");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (tuning_replicates < 1)
    throw std::invalid_argument("tuning_replicates must be >= 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
  if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
  if (reg <= 0.0) throw std::invalid_argument("reg must be > 0");
  if (gmax_safety <= 0.0) throw std::invalid_argument("gmax_safety must be > 0");
  if (minimizer_tol <= 0.0)
    throw std::invalid_argument("minimizer_tol must be > 0");
  if (probe_steps < 0) throw std::invalid_argument("probe_steps must be >= 0");
  if (data.samples_per_class < 1)
    throw std::invalid_argument("samples_per_class must be >= 1");
  if (data.test_size < 1) throw std::invalid_argument("test_size must be >= 1");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    read_if(r, "bandwidth_hz", cfg.radio.bandwidth_hz);
    read_if(r, "carrier_hz", cfg.radio.carrier_hz);
    if (r.contains("tx_power_dbm"))
      cfg.radio.tx_power_w = wireless::dbm_to_watts(r.at("tx_power_dbm").get<double>());
    read_if(r, "tx_power_w", cfg.radio.tx_power_w);
    if (r.contains("noise_psd_dbm_hz"))
      cfg.radio.noise_psd =
          wireless::dbm_to_watts(r.at("noise_psd_dbm_hz").get<double>());
    read_if(r, "noise_psd_w_hz", cfg.radio.noise_psd);
    read_if(r, "pathloss_exponent", cfg.radio.pathloss_exponent);
    read_if(r, "ref_loss_db", cfg.radio.ref_loss_db);
    read_if(r, "r_max_m", cfg.radio.r_max_m);
  }
  read_if(j, "num_devices", cfg.num_devices);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (d.contains("source")) {
      const std::string s = d.at("source").get<std::string>();
      if (s == "synthetic")
        cfg.data.source = DataConfig::Source::Synthetic;
      else if (s == "mnist")
        cfg.data.source = DataConfig::Source::MnistIdx;
      else
        throw std::invalid_argument("data.source must be 'synthetic' or 'mnist'");
    }
    read_if(d, "input_dim", cfg.data.synthetic.input_dim);
    read_if(d, "num_classes", cfg.data.synthetic.num_classes);
    read_if(d, "noise_sigma", cfg.data.synthetic.noise_sigma);
    read_if(d, "train_images", cfg.data.train_images);
    read_if(d, "train_labels", cfg.data.train_labels);
    read_if(d, "test_images", cfg.data.test_images);
    read_if(d, "test_labels", cfg.data.test_labels);
    read_if(d, "samples_per_class", cfg.data.samples_per_class);
    read_if(d, "test_size", cfg.data.test_size);
  }
  read_if(j, "reg", cfg.reg);
  read_if(j, "budget_ms", cfg.budget_ms);
  read_if(j, "eta", cfg.eta);
  read_if(j, "eta_grid", cfg.eta_grid);
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (p.is_string()) {
      cfg.policy.kind = design::parse_policy_kind(p.get<std::string>());
    } else {
      if (p.contains("kind"))
        cfg.policy.kind = design::parse_policy_kind(p.at("kind").get<std::string>());
      read_if(p, "r_in_fraction", cfg.policy.r_in_fraction);
      read_if(p, "mix_probability", cfg.policy.mix_probability);
    }
  }
  read_if(j, "replicates", cfg.replicates);
  read_if(j, "tuning_replicates", cfg.tuning_replicates);
  read_if(j, "seed", cfg.seed);
  read_if(j, "log_every", cfg.log_every);
  read_if(j, "gmax_safety", cfg.gmax_safety);
  read_if(j, "minimizer_tol", cfg.minimizer_tol);
  read_if(j, "probe_steps", cfg.probe_steps);
  if (j.contains("deployment_file") && !j.at("deployment_file").is_null())
    cfg.deployment_file = j.at("deployment_file").get<std::string>();
  if (j.contains("disk_sampling")) {
    const std::string s = j.at("disk_sampling").get<std::string>();
    if (s == "area")
      cfg.disk_sampling = wireless::DiskSampling::UniformArea;
    else if (s == "radius")
      cfg.disk_sampling = wireless::DiskSampling::UniformRadius;
    else
      throw std::invalid_argument("disk_sampling must be 'area' or 'radius'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["radio"] = {{"bandwidth_hz", radio.bandwidth_hz},
                {"carrier_hz", radio.carrier_hz},
                {"tx_power_w", radio.tx_power_w},
                {"noise_psd_w_hz", radio.noise_psd},
                {"pathloss_exponent", radio.pathloss_exponent},
                {"ref_loss_db", radio.ref_loss_db},
                {"r_max_m", radio.r_max_m}};
  j["num_devices"] = num_devices;
  j["data"] = {{"source", data.source == DataConfig::Source::Synthetic
                              ? "synthetic"
                              : "mnist"},
               {"input_dim", data.synthetic.input_dim},
               {"num_classes", data.synthetic.num_classes},
               {"noise_sigma", data.synthetic.noise_sigma},
               {"samples_per_class", data.samples_per_class},
               {"test_size", data.test_size}};
  if (data.source == DataConfig::Source::MnistIdx) {
    j["data"]["train_images"] = data.train_images;
    j["data"]["train_labels"] = data.train_labels;
    j["data"]["test_images"] = data.test_images;
    j["data"]["test_labels"] = data.test_labels;
  }
  j["reg"] = reg;
  j["budget_ms"] = budget_ms;
  j["eta"] = eta;
  if (!eta_grid.empty()) j["eta_grid"] = eta_grid;
  j["policy"] = {{"kind", design::policy_name(policy.kind)},
                 {"r_in_fraction", policy.r_in_fraction},
                 {"mix_probability", policy.mix_probability}};
  j["replicates"] = replicates;
  j["tuning_replicates"] = tuning_replicates;
  j["seed"] = seed;
  j["log_every"] = log_every;
  j["gmax_safety"] = gmax_safety;
  j["minimizer_tol"] = minimizer_tol;
  j["probe_steps"] = probe_steps;
  if (deployment_file) j["deployment_file"] = *deployment_file;
  j["disk_sampling"] =
      disk_sampling == wireless::DiskSampling::UniformArea ? "area" : "radius";
  return j;
}

}  // namespace otafl::harness
