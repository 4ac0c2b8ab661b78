#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hbpn/hourglass.hpp"
#include "hbpn/image.hpp"

namespace hbpn {

struct ImageMetrics {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  int scale = 0;
  int crop = 0;
  bool self_ensemble = false;
  std::vector<ImageMetrics> images;

  double mean_psnr() const;
  double mean_ssim() const;
};

// Y-channel PSNR in dB over the planes with crop_s pixels shaved from every
// border, on the 8-bit scale; identical inputs report the 100 dB cap.
double psnr_y(const ImageRGB& a, const ImageRGB& b, int crop_s);

// Single-scale SSIM on the shaved Y plane: 11x11 Gaussian window sigma 1.5,
// K1=0.01, K2=0.03, dynamic range 255, averaged over fully-valid windows.
double ssim_y(const ImageRGB& a, const ImageRGB& b, int crop_s);

// Geometric self-ensemble: run the model over all 8 dihedral variants,
// undo each transform and average. When orig_h/orig_w are nonzero the
// result is cropped back to them (padding removal).
using ImageRunner = std::function<ImageRGB(const ImageRGB&)>;
ImageRGB self_ensemble_infer(const ImageRunner& run, const ImageRGB& input,
                             int orig_h = 0, int orig_w = 0);
ImageRGB self_ensemble_infer(const HBPNModel& model, const ImageRGB& input,
                             int orig_h = 0, int orig_w = 0);

// Single forward pass on one image (no gradients), clamped to [0,1].
ImageRGB model_infer(const HBPNModel& model, const ImageRGB& input);

void write_report(const MetricsReport& report,
                  const std::filesystem::path& table_path,
                  const std::filesystem::path& records_path);

}  // namespace hbpn
