#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hbpn/hourglass.hpp"

namespace hbpn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LossKind { MSE, L1 };

struct TrainConfig {
  int scale = 4;
  int modules = 3;  // K
  int depth = 3;    // T
  int base_channels = 64;
  HeadKind head = HeadKind::WR;
  float learning_rate = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  float weight_decay = 1e-4f;
  // (batch size, iteration count) phases, consumed in order
  std::vector<std::pair<int, std::int64_t>> batch_schedule{{8, 500000},
                                                           {32, 500000}};
  int patch_size = 64;
  bool augment = true;
  std::uint64_t seed = 1;
  std::string dataset_root;
  std::string out_dir = "runs/default";
  std::int64_t checkpoint_interval = 1000;
  std::int64_t log_interval = 50;
  LossKind loss = LossKind::MSE;
  int threads = 0;

  void validate() const;
  ModelConfig model_config() const {
    return ModelConfig{modules, depth, base_channels, head, scale};
  }
  std::int64_t total_steps() const;
  // batch size in effect at 0-based global step, or 0 past the schedule
  int batch_at_step(std::int64_t step) const;
};

TrainConfig load_config(const std::filesystem::path& path);
// "key=value" override, same keys as the config file
void apply_override(TrainConfig& cfg, const std::string& assignment);
void print_config(const TrainConfig& cfg, std::ostream& out);

std::string schedule_to_string(
    const std::vector<std::pair<int, std::int64_t>>& schedule);
std::vector<std::pair<int, std::int64_t>> parse_schedule(
    const std::string& text);

// Stateless per-step stream seeding for reproducible, resumable sampling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace hbpn
