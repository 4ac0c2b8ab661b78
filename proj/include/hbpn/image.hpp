#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbpn/tensor.hpp"

namespace hbpn {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Planar RGB image, three h*w float planes. Values are clamped to [0,1]
// when constructed from 8-bit sources; intermediate arithmetic (residuals,
// unquantized resampling) may leave the range.
struct ImageRGB {
  int height = 0;
  int width = 0;
  std::vector<float> planes;  // R plane, then G, then B

  ImageRGB() = default;
  ImageRGB(int h, int w, float fill = 0.0f)
      : height(h), width(w),
        planes(static_cast<std::size_t>(3) * h * w, fill) {
    if (h < 1 || w < 1) {
      throw ImageError("ImageRGB: dimensions must be at least 1x1, got " +
                       std::to_string(h) + "x" + std::to_string(w));
    }
  }

  std::int64_t plane_size() const {
    return static_cast<std::int64_t>(height) * width;
  }
  float* plane(int c) { return planes.data() + c * plane_size(); }
  const float* plane(int c) const { return planes.data() + c * plane_size(); }
  float& at(int c, int y, int x) {
    return planes[c * plane_size() + static_cast<std::int64_t>(y) * width + x];
  }
  float at(int c, int y, int x) const {
    return planes[c * plane_size() + static_cast<std::int64_t>(y) * width + x];
  }
};

// A training pair: bicubically pre-upsampled LR input at HR size + HR target.
struct SamplePair {
  ImageRGB input;
  ImageRGB target;
  int scale = 2;
};

// ---- file I/O (PNG via zlib, binary PPM/PGM) ----
ImageRGB load_image(const std::filesystem::path& path);
void save_image(const ImageRGB& img, const std::filesystem::path& path);
// single-plane 8-bit grayscale output; values expected in [0,1]
void save_gray(const std::vector<float>& plane, int height, int width,
               const std::filesystem::path& path);
std::uint8_t quantize_byte(float v);  // clamp then round half away from zero

// ---- resampling ----
// Cubic-convolution resize (a = -0.5), antialiased when shrinking, symmetric
// boundary extension, weights normalized per output pixel. Public entry
// clamps to [0,1]; the _raw variant leaves values untouched for residual
// arithmetic.
ImageRGB bicubic_resize(const ImageRGB& img, int out_h, int out_w);
ImageRGB bicubic_resize_raw(const ImageRGB& img, int out_h, int out_w);

namespace resample_detail {
// One output pixel row of resampling weights: source indices (already
// reflected into range) and normalized weights.
struct PixelTaps {
  std::vector<int> indices;
  std::vector<float> weights;
};
std::vector<PixelTaps> build_taps(int in_len, int out_len, bool antialias);
float cubic_kernel(float x);  // the a = -0.5 kernel
}  // namespace resample_detail

// ---- color ----
// BT.601 studio-swing luma on the 8-bit scale: Y in [16,235].
std::vector<float> rgb_to_y(const ImageRGB& img);

// ---- geometry ----
ImageRGB modcrop(const ImageRGB& img, int m);
ImageRGB crop(const ImageRGB& img, int h, int w);

struct PaddedImage {
  ImageRGB image;
  int orig_h = 0;
  int orig_w = 0;
};
// Mirror-pad right/bottom to the next multiple of m.
PaddedImage pad_to_multiple(const ImageRGB& img, int m);

// ---- dihedral augmentation (4 rotations x optional horizontal flip) ----
ImageRGB apply_dihedral(const ImageRGB& img, int idx);    // idx in [0,8)
ImageRGB invert_dihedral(const ImageRGB& img, int idx);
std::vector<ImageRGB> augment_x8(const ImageRGB& img);
inline ImageRGB inverse_augment(int idx, const ImageRGB& img) {
  return invert_dihedral(img, idx);
}

// ---- dataset preparation ----
// Grid-tiled patch pairs; a seeded random offset is added per patch when the
// image leaves room. Each input is the HR patch degraded by bicubic
// down-then-up at `scale`.
std::vector<SamplePair> extract_patches(const ImageRGB& hr, int scale,
                                        int patch_size, int stride,
                                        std::uint64_t seed);

// ---- tensor bridge ----
TensorPtr image_to_tensor(const ImageRGB& img);
ImageRGB tensor_to_image(const Tensor4& t, int batch_index = 0);

}  // namespace hbpn
