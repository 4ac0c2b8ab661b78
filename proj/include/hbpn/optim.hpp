#pragma once

#include <cstdint>
#include <vector>

#include "hbpn/tensor.hpp"

namespace hbpn::optim {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 1e-4f;  // L2 term folded into the gradient
};

// Adam with bias correction. A step with any non-finite gradient is skipped
// (no parameter or moment change) but still advances the step counter and is
// counted in rejected_steps().
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, AdamConfig cfg);

  bool step();
  void zero_grad();

  std::uint64_t step_count() const { return t_; }
  std::uint64_t rejected_steps() const { return rejected_; }
  const AdamConfig& config() const { return cfg_; }

  // checkpoint access; moments are stored per parameter in registration order
  std::vector<std::vector<float>>& moments_m() { return m_; }
  std::vector<std::vector<float>>& moments_v() { return v_; }
  void restore(std::uint64_t t, std::vector<std::vector<float>> m,
               std::vector<std::vector<float>> v);

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<float>> m_, v_;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::uint64_t rejected_ = 0;
};

}  // namespace hbpn::optim
