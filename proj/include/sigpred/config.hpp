#ifndef SIGPRED_CONFIG_HPP
#define SIGPRED_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigpred/covnet.hpp"
#include "sigpred/eval.hpp"
#include "sigpred/hsfm.hpp"
#include "sigpred/uncertainty.hpp"

namespace sigpred {

/// Flat key=value config file: one `key = value` per line, `#` comments.
/// Unknown keys are rejected so typos fail loudly.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& name) {
    KeyValueFile kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
          throw std::runtime_error(name + ":" + std::to_string(line_no) +
                                   ": expected 'key = value'");
        }
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw std::runtime_error(name + ":" + std::to_string(line_no) + ": empty key");
      }
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    return parse(f, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::runtime_error("config: bad number for " + key + ": '" + it->second + "'");
    }
  }

  long get_long(const std::string& key, long fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v) {
      throw std::runtime_error("config: expected integer for " + key);
    }
    return l;
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::istringstream is(it->second);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Everything one reproducible run needs.
struct RunConfig {
  std::vector<std::string> datasets;  // scene files
  std::string holdout;                // file stem of the held-out scene
  double source_dt = 0.2;             // seconds per frame_id unit
  int n_obs = 8;
  int n_pred = 24;
  int window_stride = 1;
  std::string out_dir = "out";
  std::string weights_path;           // covnet-v1 file; empty = out_dir/covnet.txt
  std::uint64_t seed = 0;
  CoverageMode coverage_mode = CoverageMode::Mahalanobis;
  Vec2 signn_init_var{0.0, 0.0};

  HsfmParams hsfm;
  McConfig mc;
  TrainConfig train;
};

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "datasets", "holdout", "source_dt", "n_obs", "n_pred", "window_stride",
      "out_dir", "weights", "seed", "coverage_mode",
      "signn.init_var_x", "signn.init_var_y",
      "hsfm.tau", "hsfm.v_des", "hsfm.repulsion_strength", "hsfm.repulsion_range",
      "hsfm.anisotropy", "hsfm.forward_gain", "hsfm.sideward_gain",
      "hsfm.heading_damping", "hsfm.heading_inertia", "hsfm.dt", "hsfm.goal_radius",
      "mc.n_samples", "mc.init_pos_std", "mc.init_vel_std", "mc.init_heading_std",
      "train.lr", "train.epochs", "train.batch_size", "train.init_scale"};
  return keys;
}

inline RunConfig run_config_from(const KeyValueFile& kv) {
  const auto& known = known_config_keys();
  for (const auto& [key, value] : kv.values()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }

  RunConfig c;
  c.datasets = kv.get_list("datasets");
  c.holdout = kv.get_string("holdout", "");
  c.source_dt = kv.get_double("source_dt", c.source_dt);
  c.n_obs = static_cast<int>(kv.get_long("n_obs", c.n_obs));
  c.n_pred = static_cast<int>(kv.get_long("n_pred", c.n_pred));
  c.window_stride = static_cast<int>(kv.get_long("window_stride", c.window_stride));
  c.out_dir = kv.get_string("out_dir", c.out_dir);
  c.weights_path = kv.get_string("weights", "");
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", 0));

  const std::string mode = kv.get_string("coverage_mode", "mahalanobis");
  if (mode == "mahalanobis") c.coverage_mode = CoverageMode::Mahalanobis;
  else if (mode == "per_axis") c.coverage_mode = CoverageMode::PerAxis;
  else throw std::runtime_error("config: coverage_mode must be mahalanobis or per_axis");

  c.signn_init_var.x() = kv.get_double("signn.init_var_x", 0.0);
  c.signn_init_var.y() = kv.get_double("signn.init_var_y", 0.0);

  c.hsfm.relaxation_time = kv.get_double("hsfm.tau", c.hsfm.relaxation_time);
  c.hsfm.desired_speed = kv.get_double("hsfm.v_des", c.hsfm.desired_speed);
  c.hsfm.repulsion_strength = kv.get_double("hsfm.repulsion_strength", c.hsfm.repulsion_strength);
  c.hsfm.repulsion_range = kv.get_double("hsfm.repulsion_range", c.hsfm.repulsion_range);
  c.hsfm.anisotropy = kv.get_double("hsfm.anisotropy", c.hsfm.anisotropy);
  c.hsfm.forward_gain = kv.get_double("hsfm.forward_gain", c.hsfm.forward_gain);
  c.hsfm.sideward_gain = kv.get_double("hsfm.sideward_gain", c.hsfm.sideward_gain);
  c.hsfm.heading_damping = kv.get_double("hsfm.heading_damping", c.hsfm.heading_damping);
  c.hsfm.heading_inertia = kv.get_double("hsfm.heading_inertia", c.hsfm.heading_inertia);
  c.hsfm.dt = kv.get_double("hsfm.dt", c.hsfm.dt);
  c.hsfm.goal_radius = kv.get_double("hsfm.goal_radius", c.hsfm.goal_radius);
  c.hsfm.validate();

  c.mc.n_samples = static_cast<int>(kv.get_long("mc.n_samples", c.mc.n_samples));
  c.mc.seed = c.seed;
  c.mc.init_pos_std = kv.get_double("mc.init_pos_std", c.mc.init_pos_std);
  c.mc.init_vel_std = kv.get_double("mc.init_vel_std", c.mc.init_vel_std);
  c.mc.init_heading_std = kv.get_double("mc.init_heading_std", c.mc.init_heading_std);

  c.train.learning_rate = kv.get_double("train.lr", c.train.learning_rate);
  c.train.epochs = static_cast<int>(kv.get_long("train.epochs", c.train.epochs));
  c.train.batch_size = static_cast<int>(kv.get_long("train.batch_size", c.train.batch_size));
  c.train.init_scale = kv.get_double("train.init_scale", c.train.init_scale);
  c.train.seed = c.seed;

  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from(KeyValueFile::parse_file(path));
}

}  // namespace sigpred

#endif  // SIGPRED_CONFIG_HPP
