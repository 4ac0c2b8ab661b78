#include "hbpn/nn.hpp"

#include <cmath>

namespace hbpn::nn {

void fill_normal_fanin(Tensor4& w, int fan_in, float variance_scale,
                       std::mt19937& rng) {
  const float stddev = std::sqrt(variance_scale / static_cast<float>(fan_in));
  std::normal_distribution<float> dist(0.0f, stddev);
  for (auto& v : w.data) v = dist(rng);
}

Tensor4 he_init(const ConvSpec& spec, std::uint64_t seed) {
  spec.validate();
  Tensor4 w(Shape4{spec.out_channels, spec.in_channels, spec.kernel,
                   spec.kernel});
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  fill_normal_fanin(w, spec.in_channels * spec.kernel * spec.kernel, 2.0f,
                    rng);
  return w;
}

namespace {

TensorPtr bias_tensor(int channels) {
  return make_tensor(Shape4{1, channels, 1, 1}, true);
}

}  // namespace

Conv2d::Conv2d(int in, int out, int k, int stride, int pad)
    : spec{in, out, k, stride, pad} {
  spec.validate();
  weight = make_tensor(Shape4{out, in, k, k}, true);
  bias = bias_tensor(out);
}

void Conv2d::init(std::mt19937& rng, float variance_scale) {
  fill_normal_fanin(*weight, spec.in_channels * spec.kernel * spec.kernel,
                    variance_scale, rng);
}

std::int64_t Conv2d::parameter_count() const {
  return valid() ? weight->numel() + bias->numel() : 0;
}

void Conv2d::collect(const std::string& prefix,
                     std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(int in, int out, int k, int stride, int pad)
    : spec{in, out, k, stride, pad} {
  spec.validate();
  weight = make_tensor(Shape4{out, in, k, k}, true);
  bias = bias_tensor(out);
}

void ConvTranspose2d::init(std::mt19937& rng, float variance_scale) {
  fill_normal_fanin(*weight, spec.in_channels * spec.kernel * spec.kernel,
                    variance_scale, rng);
}

std::int64_t ConvTranspose2d::parameter_count() const {
  return valid() ? weight->numel() + bias->numel() : 0;
}

void ConvTranspose2d::collect(const std::string& prefix,
                              std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

PReLU::PReLU(int channels, float init) {
  slopes = make_tensor(Shape4{1, channels, 1, 1}, true, init);
}

void PReLU::collect(const std::string& prefix,
                    std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".prelu", slopes});
}

}  // namespace hbpn::nn
