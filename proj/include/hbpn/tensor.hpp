#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbpn {

// Shape of a 4-D feature map: batch, channels, height, width.
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major 4-D float tensor with an optional gradient buffer.
// grad is allocated lazily; when present it always matches data in size.
struct Tensor4 {
  Shape4 shape;
  std::vector<float> data;
  std::vector<float> grad;
  bool requires_grad = false;

  Tensor4() = default;
  explicit Tensor4(Shape4 s, float fill = 0.0f)
      : shape(s), data(checked_size(s), fill) {}

  static std::size_t checked_size(Shape4 s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ShapeError("Tensor4: negative dimension in " + s.str());
    }
    return static_cast<std::size_t>(s.numel());
  }

  std::int64_t numel() const { return shape.numel(); }

  std::int64_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::int64_t>(n) * shape.c + c) * shape.h + y) *
               shape.w + x;
  }
  float& at(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }

  float* channel(int n, int c) {
    return data.data() + (static_cast<std::int64_t>(n) * shape.c + c) *
                             shape.h * shape.w;
  }
  const float* channel(int n, int c) const {
    return data.data() + (static_cast<std::int64_t>(n) * shape.c + c) *
                             shape.h * shape.w;
  }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
  }
};

using TensorPtr = std::shared_ptr<Tensor4>;

inline TensorPtr make_tensor(Shape4 s, bool requires_grad = false,
                             float fill = 0.0f) {
  auto t = std::make_shared<Tensor4>(s, fill);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

// Geometry of a (transposed) convolution. Weight layout is (out, in, k, k)
// in the op's own input/output convention; biases are per output channel.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  void validate() const {
    if (kernel < 1 || stride < 1 || padding < 0) {
      throw ShapeError("ConvSpec: kernel=" + std::to_string(kernel) +
                       " stride=" + std::to_string(stride) +
                       " padding=" + std::to_string(padding));
    }
  }
  std::int64_t weight_count() const {
    return static_cast<std::int64_t>(out_channels) * in_channels * kernel *
           kernel;
  }
};

// Output extent of a direct convolution along one spatial axis.
inline int conv_out_extent(int in, const ConvSpec& s, const char* axis) {
  const int span = in + 2 * s.padding - s.kernel;
  if (span < 0) {
    throw ShapeError(std::string("conv2d: input ") + axis + "=" +
                     std::to_string(in) + " too small for kernel " +
                     std::to_string(s.kernel) + " with padding " +
                     std::to_string(s.padding));
  }
  return span / s.stride + 1;
}

// Output extent of a transposed convolution along one spatial axis.
inline int deconv_out_extent(int in, const ConvSpec& s, const char* axis) {
  const int out = (in - 1) * s.stride - 2 * s.padding + s.kernel;
  if (out < 1) {
    throw ShapeError(std::string("conv_transpose2d: computed output ") + axis +
                     "=" + std::to_string(out) + " from input " +
                     std::to_string(in));
  }
  return out;
}

}  // namespace hbpn
