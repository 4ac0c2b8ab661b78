#include "hbpn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace hbpn {

namespace {

constexpr double kPsnrCap = 100.0;

std::vector<double> shaved_y(const ImageRGB& img, int crop, int& h, int& w) {
  const auto y = rgb_to_y(img);
  h = img.height - 2 * crop;
  w = img.width - 2 * crop;
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out[static_cast<std::size_t>(r) * w + c] =
          y[static_cast<std::size_t>(r + crop) * img.width + (c + crop)];
    }
  }
  return out;
}

void check_pair(const ImageRGB& a, const ImageRGB& b, int crop,
                const char* op) {
  if (a.height != b.height || a.width != b.width) {
    throw ImageError(std::string(op) + ": size mismatch " +
                     std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  }
  if (crop < 0 || a.height <= 2 * crop || a.width <= 2 * crop) {
    throw ImageError(std::string(op) + ": crop " + std::to_string(crop) +
                     " leaves nothing of " + std::to_string(a.height) + "x" +
                     std::to_string(a.width));
  }
}

}  // namespace

double psnr_y(const ImageRGB& a, const ImageRGB& b, int crop_s) {
  check_pair(a, b, crop_s, "psnr_y");
  int h, w;
  const auto ya = shaved_y(a, crop_s, h, w);
  const auto yb = shaved_y(b, crop_s, h, w);
  double mse = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i) {
    const double d = ya[i] - yb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ya.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim_y(const ImageRGB& a, const ImageRGB& b, int crop_s) {
  check_pair(a, b, crop_s, "ssim_y");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
  constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
  int h, w;
  const auto ya = shaved_y(a, crop_s, h, w);
  const auto yb = shaved_y(b, crop_s, h, w);
  if (h < kWin || w < kWin) {
    throw ImageError("ssim_y: " + std::to_string(h) + "x" + std::to_string(w) +
                     " after crop is smaller than the 11x11 window");
  }
  double window[kWin][kWin];
  double wsum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - (kWin - 1) / 2.0;
      const double dx = j - (kWin - 1) / 2.0;
      window[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      wsum += window[i][j];
    }
  }
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) window[i][j] /= wsum;

  const int oh = h - kWin + 1;
  const int ow = w - kWin + 1;
  double total = 0.0;
  for (int y0 = 0; y0 < oh; ++y0) {
    for (int x0 = 0; x0 < ow; ++x0) {
      double mu1 = 0.0, mu2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
      for (int i = 0; i < kWin; ++i) {
        const double* ra = &ya[static_cast<std::size_t>(y0 + i) * w + x0];
        const double* rb = &yb[static_cast<std::size_t>(y0 + i) * w + x0];
        for (int j = 0; j < kWin; ++j) {
          const double wv = window[i][j];
          mu1 += wv * ra[j];
          mu2 += wv * rb[j];
          s11 += wv * ra[j] * ra[j];
          s22 += wv * rb[j] * rb[j];
          s12 += wv * (ra[j] * rb[j]);
        }
      }
      const double var1 = s11 - mu1 * mu1;
      const double var2 = s22 - mu2 * mu2;
      const double cov = s12 - mu1 * mu2;
      const double num = (2.0 * (mu1 * mu2) + kC1) * (2.0 * cov + kC2);
      const double den =
          (mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2);
      total += num / den;
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

ImageRGB model_infer(const HBPNModel& model, const ImageRGB& input) {
  const auto out = model.forward(nullptr, image_to_tensor(input));
  return tensor_to_image(*out.sr);
}

ImageRGB self_ensemble_infer(const ImageRunner& run, const ImageRGB& input,
                             int orig_h, int orig_w) {
  std::vector<ImageRGB> restored;
  restored.reserve(8);
  for (int idx = 0; idx < 8; ++idx) {
    const ImageRGB variant = apply_dihedral(input, idx);
    restored.push_back(invert_dihedral(run(variant), idx));
    if (restored.back().height != input.height ||
        restored.back().width != input.width) {
      throw ImageError("self_ensemble_infer: runner changed image size");
    }
  }
  // pairwise tree sum, so averaging identical images is exact
  ImageRGB acc(input.height, input.width, 0.0f);
  for (std::size_t i = 0; i < acc.planes.size(); ++i) {
    const float s01 = restored[0].planes[i] + restored[1].planes[i];
    const float s23 = restored[2].planes[i] + restored[3].planes[i];
    const float s45 = restored[4].planes[i] + restored[5].planes[i];
    const float s67 = restored[6].planes[i] + restored[7].planes[i];
    acc.planes[i] = ((s01 + s23) + (s45 + s67)) * 0.125f;
  }
  if (orig_h > 0 && orig_w > 0) return crop(acc, orig_h, orig_w);
  return acc;
}

ImageRGB self_ensemble_infer(const HBPNModel& model, const ImageRGB& input,
                             int orig_h, int orig_w) {
  return self_ensemble_infer(
      [&model](const ImageRGB& img) { return model_infer(model, img); }, input,
      orig_h, orig_w);
}

double MetricsReport::mean_psnr() const {
  double acc = 0.0;
  for (const auto& m : images) acc += m.psnr;
  return images.empty() ? 0.0 : acc / static_cast<double>(images.size());
}

double MetricsReport::mean_ssim() const {
  double acc = 0.0;
  for (const auto& m : images) acc += m.ssim;
  return images.empty() ? 0.0 : acc / static_cast<double>(images.size());
}

void write_report(const MetricsReport& report,
                  const std::filesystem::path& table_path,
                  const std::filesystem::path& records_path) {
  std::ofstream table(table_path);
  if (!table) throw ImageError(table_path.string() + ": cannot open");
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %10s %10s\n", "image", "PSNR(dB)",
                "SSIM");
  table << line;
  for (const auto& m : report.images) {
    std::snprintf(line, sizeof(line), "%-28s %10.2f %10.4f\n", m.name.c_str(),
                  m.psnr, m.ssim);
    table << line;
  }
  std::snprintf(line, sizeof(line), "%-28s %10.2f %10.4f\n", "mean",
                report.mean_psnr(), report.mean_ssim());
  table << line;
  table << "scale: " << report.scale << "  crop: " << report.crop
        << "  self-ensemble: " << (report.self_ensemble ? "on" : "off")
        << "\n";

  std::ofstream records(records_path);
  if (!records) throw ImageError(records_path.string() + ": cannot open");
  for (const auto& m : report.images) {
    nlohmann::json j{{"name", m.name}, {"psnr", m.psnr}, {"ssim", m.ssim}};
    records << j.dump() << "\n";
  }
}

}  // namespace hbpn
