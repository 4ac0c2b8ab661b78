#pragma once

#include <random>
#include <string>
#include <vector>

#include "hbpn/autodiff.hpp"
#include "hbpn/tensor.hpp"

namespace hbpn::nn {

struct NamedParam {
  std::string name;
  TensorPtr tensor;
};

// He-style weights for a convolution followed by PReLU: zero-mean normal
// with variance 2/fan_in, fan_in = in_channels * kernel^2. Bias is zero.
Tensor4 he_init(const ConvSpec& spec, std::uint64_t seed);

// The shared sampling routine. `variance_scale` of 2 gives the He fill;
// 1 is used for the linear 1x1 weighting layers and output heads.
void fill_normal_fanin(Tensor4& w, int fan_in, float variance_scale,
                       std::mt19937& rng);

struct Conv2d {
  ConvSpec spec;
  TensorPtr weight;
  TensorPtr bias;

  Conv2d() = default;
  Conv2d(int in, int out, int k, int stride, int pad);
  void init(std::mt19937& rng, float variance_scale);
  TensorPtr forward(ad::Tape* tape, const TensorPtr& x) const {
    return ad::conv2d(tape, x, weight, bias, spec);
  }
  bool valid() const { return static_cast<bool>(weight); }
  std::int64_t parameter_count() const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct ConvTranspose2d {
  ConvSpec spec;
  TensorPtr weight;
  TensorPtr bias;

  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int k, int stride, int pad);
  void init(std::mt19937& rng, float variance_scale);
  TensorPtr forward(ad::Tape* tape, const TensorPtr& x) const {
    return ad::conv_transpose2d(tape, x, weight, bias, spec);
  }
  bool valid() const { return static_cast<bool>(weight); }
  std::int64_t parameter_count() const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct PReLU {
  TensorPtr slopes;

  PReLU() = default;
  explicit PReLU(int channels, float init = 0.25f);
  TensorPtr forward(ad::Tape* tape, const TensorPtr& x) const {
    return ad::prelu(tape, x, slopes);
  }
  bool valid() const { return static_cast<bool>(slopes); }
  std::int64_t parameter_count() const { return slopes ? slopes->numel() : 0; }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

}  // namespace hbpn::nn
