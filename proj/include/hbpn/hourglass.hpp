#pragma once

// SR hourglass modules and the stacked model. Each module runs T DBP blocks
// down to the bottleneck and T UBP blocks back up, with 1x1 shortcuts at
// matching scales, and emits a coarse SR image plus a weighting map. The
// model cascades K modules with 1x1 global shortcuts and reconstructs either
// by softmax-weighted addition of the coarse results or by concatenation
// through a single convolution.

#include <random>
#include <string>
#include <vector>

#include "hbpn/bp_blocks.hpp"
#include "hbpn/nn.hpp"

namespace hbpn {

enum class HeadKind { WR, Plain };

struct ModelConfig {
  int modules = 3;       // K
  int depth = 3;         // T
  int base_channels = 64;
  HeadKind head = HeadKind::WR;
  int scale = 4;  // carried for data handling; the net is scale-agnostic

  int pad_multiple() const { return 1 << depth; }
};

struct HourGlassModule {
  int depth = 0;
  int base_channels = 0;
  std::vector<BackProjectionBlock> dbp;      // index i: base*2^i -> base*2^(i+1)
  std::vector<BackProjectionBlock> ubp;      // chain order, bottleneck first
  std::vector<nn::Conv2d> local_shortcuts;   // per UBP input, 1x1
  nn::Conv2d coarse_head;  // 3x3, base -> 3, linear
  nn::Conv2d weight_head;  // 3x3, base -> 3, linear

  static HourGlassModule build(int depth, int base_channels,
                               std::mt19937& rng);

  struct Out {
    TensorPtr features;     // same shape as the input features
    TensorPtr coarse;       // (n,3,H,W)
    TensorPtr weight_map;   // (n,3,H,W)
    TensorPtr last_preact;  // input of the module's final PReLU
  };
  Out forward(ad::Tape* tape, const TensorPtr& features) const;

  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;
};

struct HBPNModel {
  ModelConfig cfg;
  nn::Conv2d feature_head;  // 3 -> base, 3x3
  nn::PReLU feature_act;
  std::vector<HourGlassModule> modules;
  std::vector<nn::Conv2d> global_shortcuts;  // K-1 of them, 1x1 on base
  nn::Conv2d plain_head;                     // 3K -> 3, only for Plain

  static HBPNModel build(const ModelConfig& cfg, std::uint64_t seed);

  struct ForwardOut {
    TensorPtr sr;
    std::vector<TensorPtr> coarse;
    std::vector<TensorPtr> weight_maps;
    std::vector<TensorPtr> last_preacts;
  };
  ForwardOut forward(ad::Tape* tape, const TensorPtr& input) const;

  std::vector<nn::NamedParam> named_params() const;
  std::int64_t parameter_count() const;
};

// Softmax-weighted reconstruction: per pixel and channel, the K weighting
// maps are normalized across the module axis and the coarse results are
// combined as the resulting convex mixture.
TensorPtr wr_reconstruct(ad::Tape* tape, const std::vector<TensorPtr>& coarse,
                         const std::vector<TensorPtr>& weight_maps);

TensorPtr plain_reconstruct(ad::Tape* tape,
                            const std::vector<TensorPtr>& coarse,
                            const nn::Conv2d& head);

// Share of strictly positive values, as a percentage.
double strictly_positive_percentage(const Tensor4& t);

// That share for the pre-activation values entering each module's final
// PReLU.
std::vector<double> activation_percentage(const HBPNModel& model,
                                          const TensorPtr& input);

}  // namespace hbpn
