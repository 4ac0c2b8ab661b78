#include "hbpn/bp_blocks.hpp"

#include <cmath>

namespace hbpn {

namespace {

constexpr int kSamplerKernel = 6;
constexpr int kSamplerStride = 2;
constexpr int kSamplerPad = 2;

// Init policy: He (variance 2/fan_in) after-PReLU samplers, variance
// 1/fan_in for the linear 1x1 layers, and a damped residual sampler so a
// freshly built block starts close to its omega-weighted main path.
constexpr float kHeScale = 2.0f;
constexpr float kLinearScale = 1.0f;
constexpr float kResidualScale = 0.02f;

}  // namespace

BackProjectionBlock BackProjectionBlock::make_ubp(int in_channels,
                                                  std::mt19937& rng) {
  if (in_channels < 2 || in_channels % 2 != 0) {
    throw ShapeError("UBP: input channel count " +
                     std::to_string(in_channels) + " must be even");
  }
  BackProjectionBlock b;
  b.dir = BlockDir::UBP;
  b.in_channels = in_channels;
  const int half = in_channels / 2;
  b.up_main = nn::ConvTranspose2d(in_channels, in_channels, kSamplerKernel,
                                  kSamplerStride, kSamplerPad);
  b.down_main = nn::Conv2d(in_channels, in_channels, kSamplerKernel,
                           kSamplerStride, kSamplerPad);
  b.up_second = nn::ConvTranspose2d(in_channels, half, kSamplerKernel,
                                    kSamplerStride, kSamplerPad);
  b.lambda1x1 = nn::Conv2d(in_channels, in_channels, 1, 1, 0);
  b.omega1x1 = nn::Conv2d(in_channels, half, 1, 1, 0);
  b.act_main = nn::PReLU(in_channels);
  b.act_mirror = nn::PReLU(in_channels);
  b.act_second = nn::PReLU(half);
  b.up_main.init(rng, kHeScale);
  b.down_main.init(rng, kHeScale);
  b.up_second.init(rng, kResidualScale);
  b.lambda1x1.init(rng, kLinearScale);
  b.omega1x1.init(rng, kLinearScale);
  return b;
}

BackProjectionBlock BackProjectionBlock::make_dbp(int in_channels,
                                                  std::mt19937& rng) {
  if (in_channels < 1) {
    throw ShapeError("DBP: input channel count must be positive");
  }
  BackProjectionBlock b;
  b.dir = BlockDir::DBP;
  b.in_channels = in_channels;
  const int twice = in_channels * 2;
  b.down_main = nn::Conv2d(in_channels, in_channels, kSamplerKernel,
                           kSamplerStride, kSamplerPad);
  b.up_main = nn::ConvTranspose2d(in_channels, in_channels, kSamplerKernel,
                                  kSamplerStride, kSamplerPad);
  b.down_second = nn::Conv2d(in_channels, twice, kSamplerKernel,
                             kSamplerStride, kSamplerPad);
  b.lambda1x1 = nn::Conv2d(in_channels, in_channels, 1, 1, 0);
  b.omega1x1 = nn::Conv2d(in_channels, twice, 1, 1, 0);
  b.act_main = nn::PReLU(in_channels);
  b.act_mirror = nn::PReLU(in_channels);
  b.act_second = nn::PReLU(twice);
  b.down_main.init(rng, kHeScale);
  b.up_main.init(rng, kHeScale);
  b.down_second.init(rng, kResidualScale);
  b.lambda1x1.init(rng, kLinearScale);
  b.omega1x1.init(rng, kLinearScale);
  return b;
}

TensorPtr BackProjectionBlock::forward(ad::Tape* tape, const TensorPtr& x,
                                       TensorPtr* second_preact) const {
  if (x->shape.c != in_channels) {
    throw ShapeError("block: input channels " + std::to_string(x->shape.c) +
                     " != " + std::to_string(in_channels));
  }
  if (dir == BlockDir::UBP) {
    if (x->shape.h < 2 || x->shape.w < 2) {
      throw ShapeError("UBP: spatial dims must be >= 2, got " +
                       x->shape.str());
    }
    auto up = act_main.forward(tape, up_main.forward(tape, x));
    auto main_path = omega1x1.forward(tape, up);
    auto back = act_mirror.forward(tape, down_main.forward(tape, up));
    auto resid = ad::sub(tape, lambda1x1.forward(tape, x), back);
    auto pre = up_second.forward(tape, resid);
    if (second_preact) *second_preact = pre;
    auto corr = act_second.forward(tape, pre);
    return ad::add(tape, main_path, corr);
  }
  if (x->shape.h % 2 != 0 || x->shape.w % 2 != 0 || x->shape.h < 4 ||
      x->shape.w < 4) {
    throw ShapeError("DBP: spatial dims must be even and >= 4, got " +
                     x->shape.str() + " (pad the input first)");
  }
  auto down = act_main.forward(tape, down_main.forward(tape, x));
  auto main_path = omega1x1.forward(tape, down);
  auto back = act_mirror.forward(tape, up_main.forward(tape, down));
  auto resid = ad::sub(tape, lambda1x1.forward(tape, x), back);
  auto pre = down_second.forward(tape, resid);
  if (second_preact) *second_preact = pre;
  auto corr = act_second.forward(tape, pre);
  return ad::add(tape, main_path, corr);
}

std::int64_t BackProjectionBlock::parameter_count() const {
  std::int64_t total = 0;
  total += up_main.parameter_count() + down_main.parameter_count();
  total += up_second.parameter_count() + down_second.parameter_count();
  total += lambda1x1.parameter_count() + omega1x1.parameter_count();
  total += act_main.parameter_count() + act_mirror.parameter_count() +
           act_second.parameter_count();
  return total;
}

void BackProjectionBlock::collect(const std::string& prefix,
                                  std::vector<nn::NamedParam>& out) const {
  if (dir == BlockDir::UBP) {
    up_main.collect(prefix + ".main", out);
    down_main.collect(prefix + ".mirror", out);
    up_second.collect(prefix + ".second", out);
  } else {
    down_main.collect(prefix + ".main", out);
    up_main.collect(prefix + ".mirror", out);
    down_second.collect(prefix + ".second", out);
  }
  lambda1x1.collect(prefix + ".lambda", out);
  omega1x1.collect(prefix + ".omega", out);
  act_main.collect(prefix + ".main", out);
  act_mirror.collect(prefix + ".mirror", out);
  act_second.collect(prefix + ".second", out);
}

TensorPtr ubp_forward(ad::Tape* tape, const TensorPtr& x,
                      const BackProjectionBlock& block,
                      TensorPtr* second_preact) {
  if (block.dir != BlockDir::UBP) throw ShapeError("ubp_forward: DBP block");
  if (x->shape.c % 2 != 0) {
    throw ShapeError("ubp_forward: odd channel count " +
                     std::to_string(x->shape.c));
  }
  return block.forward(tape, x, second_preact);
}

TensorPtr dbp_forward(ad::Tape* tape, const TensorPtr& x,
                      const BackProjectionBlock& block,
                      TensorPtr* second_preact) {
  if (block.dir != BlockDir::DBP) throw ShapeError("dbp_forward: UBP block");
  return block.forward(tape, x, second_preact);
}

ImageRGB classical_back_projection(const ImageRGB& sr, const ImageRGB& lr,
                                   int scale, float lambda, int iterations,
                                   std::vector<double>* residuals) {
  if (sr.height != lr.height * scale || sr.width != lr.width * scale) {
    throw ImageError("classical_back_projection: sr " +
                     std::to_string(sr.height) + "x" + std::to_string(sr.width) +
                     " is not " + std::to_string(scale) + "x the lr " +
                     std::to_string(lr.height) + "x" + std::to_string(lr.width));
  }
  if (lambda <= 0.0f || lambda > 1.0f) {
    throw ImageError("classical_back_projection: lambda must be in (0,1]");
  }
  if (iterations < 0) {
    throw ImageError("classical_back_projection: negative iteration count");
  }
  if (iterations == 0) return sr;

  ImageRGB est = sr;
  for (int t = 0; t < iterations; ++t) {
    ImageRGB down = bicubic_resize_raw(est, lr.height, lr.width);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < down.planes.size(); ++i) {
      down.planes[i] -= lr.planes[i];
      norm2 += static_cast<double>(down.planes[i]) * down.planes[i];
    }
    if (residuals) residuals->push_back(std::sqrt(norm2));
    const ImageRGB up = bicubic_resize_raw(down, sr.height, sr.width);
    for (std::size_t i = 0; i < est.planes.size(); ++i) {
      est.planes[i] -= lambda * up.planes[i];
    }
  }
  for (auto& v : est.planes) v = std::min(1.0f, std::max(0.0f, v));
  return est;
}

}  // namespace hbpn
