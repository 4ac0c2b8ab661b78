#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hbpn/hourglass.hpp"

namespace hbpn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimizer and loop position carried alongside the weights so a run can be
// resumed step-for-step.
struct TrainerState {
  std::uint64_t adam_step = 0;
  std::uint64_t global_step = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<float>> m, v;  // per parameter, model order
};

struct Checkpoint {
  ModelConfig model_cfg;
  std::vector<std::pair<std::string, Tensor4>> params;
  bool has_trainer = false;
  TrainerState trainer;
};

// Self-describing little-endian binary container: header with format version
// and model configuration, then one record per parameter (name, shape, raw
// 32-bit values). Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const HBPNModel& model,
                     const TrainerState* trainer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the architecture from the stored configuration and installs the
// stored values; fails on any name or shape mismatch.
HBPNModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace hbpn
