#include "hbpn/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace hbpn {

std::uint8_t quantize_byte(float v) {
  const float c = std::min(1.0f, std::max(0.0f, v));
  return static_cast<std::uint8_t>(std::floor(c * 255.0f + 0.5f));
}

namespace resample_detail {

float cubic_kernel(float x) {
  const float ax = std::fabs(x);
  if (ax <= 1.0f) return (1.5f * ax - 2.5f) * ax * ax + 1.0f;
  if (ax < 2.0f) return ((-0.5f * ax + 2.5f) * ax - 4.0f) * ax + 2.0f;
  return 0.0f;
}

std::vector<PixelTaps> build_taps(int in_len, int out_len, bool antialias) {
  const double scale = static_cast<double>(out_len) / in_len;
  const bool shrink = antialias && scale < 1.0;
  const double kernel_width = shrink ? 4.0 / scale : 4.0;
  const int taps = static_cast<int>(std::ceil(kernel_width)) + 2;

  std::vector<PixelTaps> result(out_len);
  for (int x0 = 0; x0 < out_len; ++x0) {
    // 1-based source-space center of output pixel x0
    const double u = (x0 + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
    PixelTaps& pt = result[x0];
    pt.indices.resize(taps);
    pt.weights.resize(taps);
    double sum = 0.0;
    std::vector<double> wd(taps);
    for (int t = 0; t < taps; ++t) {
      const int j = left + t;  // 1-based, may fall outside
      const double d = u - j;
      const double w = shrink
                           ? scale * cubic_kernel(static_cast<float>(scale * d))
                           : cubic_kernel(static_cast<float>(d));
      wd[t] = w;
      sum += w;
      // symmetric reflection with edge repeat, period 2*in_len
      const int period = 2 * in_len;
      int m = (j - 1) % period;
      if (m < 0) m += period;
      pt.indices[t] = m < in_len ? m : period - 1 - m;
    }
    for (int t = 0; t < taps; ++t) {
      pt.weights[t] = static_cast<float>(wd[t] / sum);
    }
  }
  return result;
}

namespace {

// Resize along the row axis: (in_h x w) -> (out_h x w).
void resize_rows(const float* in, int in_h, int w,
                 const std::vector<PixelTaps>& taps, float* out) {
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < static_cast<int>(taps.size()); ++oy) {
    const PixelTaps& pt = taps[oy];
    float* orow = out + static_cast<std::int64_t>(oy) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < pt.indices.size(); ++t) {
        acc += static_cast<double>(pt.weights[t]) *
               in[static_cast<std::int64_t>(pt.indices[t]) * w + x];
      }
      orow[x] = static_cast<float>(acc);
    }
  }
  (void)in_h;
}

void resize_cols(const float* in, int h, int in_w,
                 const std::vector<PixelTaps>& taps, float* out) {
  const int out_w = static_cast<int>(taps.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const float* irow = in + static_cast<std::int64_t>(y) * in_w;
    float* orow = out + static_cast<std::int64_t>(y) * out_w;
    for (int ox = 0; ox < out_w; ++ox) {
      const PixelTaps& pt = taps[ox];
      double acc = 0.0;
      for (std::size_t t = 0; t < pt.indices.size(); ++t) {
        acc += static_cast<double>(pt.weights[t]) * irow[pt.indices[t]];
      }
      orow[ox] = static_cast<float>(acc);
    }
  }
}

}  // namespace
}  // namespace resample_detail

ImageRGB bicubic_resize_raw(const ImageRGB& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ImageError("bicubic_resize: target " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " is not positive");
  }
  const auto row_taps = resample_detail::build_taps(img.height, out_h, true);
  const auto col_taps = resample_detail::build_taps(img.width, out_w, true);
  ImageRGB out(out_h, out_w);
  std::vector<float> tmp(static_cast<std::size_t>(out_h) * img.width);
  for (int c = 0; c < 3; ++c) {
    resample_detail::resize_rows(img.plane(c), img.height, img.width, row_taps,
                                 tmp.data());
    resample_detail::resize_cols(tmp.data(), out_h, img.width, col_taps,
                                 out.plane(c));
  }
  return out;
}

ImageRGB bicubic_resize(const ImageRGB& img, int out_h, int out_w) {
  ImageRGB out = bicubic_resize_raw(img, out_h, out_w);
  for (auto& v : out.planes) v = std::min(1.0f, std::max(0.0f, v));
  return out;
}

std::vector<float> rgb_to_y(const ImageRGB& img) {
  std::vector<float> y(img.plane_size());
  const float* r = img.plane(0);
  const float* g = img.plane(1);
  const float* b = img.plane(2);
  for (std::int64_t i = 0; i < img.plane_size(); ++i) {
    y[i] = static_cast<float>(16.0 + 65.481 * r[i] + 128.553 * g[i] +
                              24.966 * b[i]);
  }
  return y;
}

ImageRGB modcrop(const ImageRGB& img, int m) {
  const int h = img.height - img.height % m;
  const int w = img.width - img.width % m;
  return crop(img, h, w);
}

ImageRGB crop(const ImageRGB& img, int h, int w) {
  if (h < 1 || w < 1 || h > img.height || w > img.width) {
    throw ImageError("crop: target " + std::to_string(h) + "x" +
                     std::to_string(w) + " out of range for " +
                     std::to_string(img.height) + "x" +
                     std::to_string(img.width));
  }
  if (h == img.height && w == img.width) return img;
  ImageRGB out(h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(img.plane(c) + static_cast<std::int64_t>(y) * img.width, w,
                  out.plane(c) + static_cast<std::int64_t>(y) * w);
    }
  }
  return out;
}

PaddedImage pad_to_multiple(const ImageRGB& img, int m) {
  if (m < 1) throw ImageError("pad_to_multiple: multiple must be >= 1");
  const int ph = (img.height + m - 1) / m * m;
  const int pw = (img.width + m - 1) / m * m;
  PaddedImage out;
  out.orig_h = img.height;
  out.orig_w = img.width;
  if (ph == img.height && pw == img.width) {
    out.image = img;
    return out;
  }
  out.image = ImageRGB(ph, pw);
  auto reflect = [](int i, int len) {
    const int period = 2 * len;
    int mm = i % period;
    if (mm < 0) mm += period;
    return mm < len ? mm : period - 1 - mm;
  };
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect(y, img.height);
      for (int x = 0; x < pw; ++x) {
        out.image.at(c, y, x) = img.at(c, sy, reflect(x, img.width));
      }
    }
  }
  return out;
}

namespace {

ImageRGB hflip(const ImageRGB& img) {
  ImageRGB out(img.height, img.width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
      }
    }
  }
  return out;
}

ImageRGB rot90ccw(const ImageRGB& img) {
  ImageRGB out(img.width, img.height);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        out.at(c, y, x) = img.at(c, x, img.width - 1 - y);
      }
    }
  }
  return out;
}

}  // namespace

ImageRGB apply_dihedral(const ImageRGB& img, int idx) {
  if (idx < 0 || idx > 7) {
    throw ImageError("apply_dihedral: index " + std::to_string(idx) +
                     " outside [0,8)");
  }
  ImageRGB out = (idx & 4) ? hflip(img) : img;
  for (int r = 0; r < (idx & 3); ++r) out = rot90ccw(out);
  return out;
}

ImageRGB invert_dihedral(const ImageRGB& img, int idx) {
  if (idx < 0 || idx > 7) {
    throw ImageError("invert_dihedral: index " + std::to_string(idx) +
                     " outside [0,8)");
  }
  ImageRGB out = img;
  for (int r = 0; r < (4 - (idx & 3)) % 4; ++r) out = rot90ccw(out);
  return (idx & 4) ? hflip(out) : out;
}

std::vector<ImageRGB> augment_x8(const ImageRGB& img) {
  std::vector<ImageRGB> out;
  out.reserve(8);
  for (int i = 0; i < 8; ++i) out.push_back(apply_dihedral(img, i));
  return out;
}

std::vector<SamplePair> extract_patches(const ImageRGB& hr, int scale,
                                        int patch_size, int stride,
                                        std::uint64_t seed) {
  if (patch_size % 8 != 0 || patch_size % scale != 0) {
    throw ImageError("extract_patches: patch size " +
                     std::to_string(patch_size) +
                     " must be divisible by 8 and by scale " +
                     std::to_string(scale));
  }
  if (stride < 1) throw ImageError("extract_patches: stride must be >= 1");
  std::vector<SamplePair> pairs;
  if (hr.height < patch_size || hr.width < patch_size) {
    std::fprintf(stderr,
                 "extract_patches: image %dx%d smaller than patch %d, "
                 "skipped\n",
                 hr.height, hr.width, patch_size);
    return pairs;
  }
  std::mt19937_64 rng(seed);
  for (int y0 = 0; y0 + patch_size <= hr.height; y0 += stride) {
    for (int x0 = 0; x0 + patch_size <= hr.width; x0 += stride) {
      const int room_y = std::min(hr.height - patch_size - y0, stride - 1);
      const int room_x = std::min(hr.width - patch_size - x0, stride - 1);
      const int jy = room_y > 0 ? static_cast<int>(rng() % (room_y + 1)) : 0;
      const int jx = room_x > 0 ? static_cast<int>(rng() % (room_x + 1)) : 0;
      ImageRGB patch(patch_size, patch_size);
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < patch_size; ++y) {
          std::copy_n(hr.plane(c) +
                          static_cast<std::int64_t>(y0 + jy + y) * hr.width +
                          x0 + jx,
                      patch_size,
                      patch.plane(c) + static_cast<std::int64_t>(y) * patch_size);
        }
      }
      SamplePair pair;
      pair.scale = scale;
      const ImageRGB lr =
          bicubic_resize(patch, patch_size / scale, patch_size / scale);
      pair.input = bicubic_resize(lr, patch_size, patch_size);
      pair.target = std::move(patch);
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

TensorPtr image_to_tensor(const ImageRGB& img) {
  auto t = make_tensor(Shape4{1, 3, img.height, img.width});
  std::copy(img.planes.begin(), img.planes.end(), t->data.begin());
  return t;
}

ImageRGB tensor_to_image(const Tensor4& t, int batch_index) {
  if (t.shape.c != 3) {
    throw ImageError("tensor_to_image: expected 3 channels, got " +
                     std::to_string(t.shape.c));
  }
  ImageRGB img(t.shape.h, t.shape.w);
  const float* src = t.data.data() +
                     static_cast<std::int64_t>(batch_index) * 3 * t.shape.h *
                         t.shape.w;
  for (std::size_t i = 0; i < img.planes.size(); ++i) {
    img.planes[i] = std::min(1.0f, std::max(0.0f, src[i]));
  }
  return img;
}

}  // namespace hbpn
