#include "hbpn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hbpn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + v +
                      "'");
  }
}

std::int64_t to_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + v +
                      "'");
  }
}

float to_float(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const float r = std::stof(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + v +
                      "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' needs true/false, got '" + v +
                    "'");
}

}  // namespace

std::vector<std::pair<int, std::int64_t>> parse_schedule(
    const std::string& text) {
  std::vector<std::pair<int, std::int64_t>> out;
  std::stringstream ss(text);
  std::string phase;
  while (std::getline(ss, phase, ',')) {
    phase = trim(phase);
    const auto x = phase.find('x');
    if (x == std::string::npos) {
      throw ConfigError("config: batch_schedule phase '" + phase +
                        "' must look like <batch>x<iterations>");
    }
    out.emplace_back(to_int("batch_schedule", phase.substr(0, x)),
                     to_i64("batch_schedule", phase.substr(x + 1)));
  }
  if (out.empty()) throw ConfigError("config: empty batch_schedule");
  return out;
}

std::string schedule_to_string(
    const std::vector<std::pair<int, std::int64_t>>& schedule) {
  std::string s;
  for (const auto& [batch, iters] : schedule) {
    if (!s.empty()) s += ",";
    s += std::to_string(batch) + "x" + std::to_string(iters);
  }
  return s;
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: expected key=value, got '" + assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key == "scale") {
    cfg.scale = to_int(key, value);
  } else if (key == "modules") {
    cfg.modules = to_int(key, value);
  } else if (key == "depth") {
    cfg.depth = to_int(key, value);
  } else if (key == "base_channels") {
    cfg.base_channels = to_int(key, value);
  } else if (key == "head") {
    if (value == "wr") {
      cfg.head = HeadKind::WR;
    } else if (value == "plain") {
      cfg.head = HeadKind::Plain;
    } else {
      throw ConfigError("config: head must be wr or plain, got '" + value +
                        "'");
    }
  } else if (key == "learning_rate") {
    cfg.learning_rate = to_float(key, value);
  } else if (key == "beta1") {
    cfg.beta1 = to_float(key, value);
  } else if (key == "beta2") {
    cfg.beta2 = to_float(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = to_float(key, value);
  } else if (key == "weight_decay") {
    cfg.weight_decay = to_float(key, value);
  } else if (key == "batch_schedule") {
    cfg.batch_schedule = parse_schedule(value);
  } else if (key == "patch_size") {
    cfg.patch_size = to_int(key, value);
  } else if (key == "augment") {
    cfg.augment = to_bool(key, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(to_i64(key, value));
  } else if (key == "dataset_root") {
    cfg.dataset_root = value;
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "checkpoint_interval") {
    cfg.checkpoint_interval = to_i64(key, value);
  } else if (key == "log_interval") {
    cfg.log_interval = to_i64(key, value);
  } else if (key == "loss") {
    if (value == "mse") {
      cfg.loss = LossKind::MSE;
    } else if (value == "l1") {
      cfg.loss = LossKind::L1;
    } else {
      throw ConfigError("config: loss must be mse or l1, got '" + value + "'");
    }
  } else if (key == "threads") {
    cfg.threads = to_int(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      apply_override(cfg, t);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (scale != 2 && scale != 4 && scale != 8) {
    throw ConfigError("config: scale must be 2, 4 or 8, got " +
                      std::to_string(scale));
  }
  if (modules < 1 || depth < 1 || base_channels < 1) {
    throw ConfigError("config: modules, depth and base_channels must be "
                      "positive");
  }
  if (learning_rate <= 0.0f) {
    throw ConfigError("config: learning_rate must be positive");
  }
  for (const auto& [batch, iters] : batch_schedule) {
    if (batch < 1 || iters < 1) {
      throw ConfigError("config: batch sizes and iteration counts must be "
                        "positive");
    }
  }
  const int mult = std::max(1 << depth, scale);
  if (patch_size < mult || patch_size % mult != 0) {
    throw ConfigError("config: patch_size " + std::to_string(patch_size) +
                      " must be a positive multiple of max(2^depth, scale) = " +
                      std::to_string(mult));
  }
  if (checkpoint_interval < 1 || log_interval < 1) {
    throw ConfigError("config: intervals must be positive");
  }
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
}

std::int64_t TrainConfig::total_steps() const {
  std::int64_t total = 0;
  for (const auto& [batch, iters] : batch_schedule) total += iters;
  return total;
}

int TrainConfig::batch_at_step(std::int64_t step) const {
  std::int64_t consumed = 0;
  for (const auto& [batch, iters] : batch_schedule) {
    consumed += iters;
    if (step < consumed) return batch;
  }
  return 0;
}

void print_config(const TrainConfig& cfg, std::ostream& out) {
  out << "scale=" << cfg.scale << "\n"
      << "modules=" << cfg.modules << "\n"
      << "depth=" << cfg.depth << "\n"
      << "base_channels=" << cfg.base_channels << "\n"
      << "head=" << (cfg.head == HeadKind::WR ? "wr" : "plain") << "\n"
      << "learning_rate=" << cfg.learning_rate << "\n"
      << "beta1=" << cfg.beta1 << "\n"
      << "beta2=" << cfg.beta2 << "\n"
      << "epsilon=" << cfg.epsilon << "\n"
      << "weight_decay=" << cfg.weight_decay << "\n"
      << "batch_schedule=" << schedule_to_string(cfg.batch_schedule) << "\n"
      << "patch_size=" << cfg.patch_size << "\n"
      << "augment=" << (cfg.augment ? "true" : "false") << "\n"
      << "seed=" << cfg.seed << "\n"
      << "dataset_root=" << cfg.dataset_root << "\n"
      << "out_dir=" << cfg.out_dir << "\n"
      << "checkpoint_interval=" << cfg.checkpoint_interval << "\n"
      << "log_interval=" << cfg.log_interval << "\n"
      << "loss=" << (cfg.loss == LossKind::MSE ? "mse" : "l1") << "\n"
      << "threads=" << cfg.threads << "\n";
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 of the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace hbpn
