#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hbpn/tensor.hpp"

namespace testutil {

inline void fill_uniform(hbpn::Tensor4& t, std::mt19937& rng, float lo = -1.0f,
                         float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  for (auto& v : t.data) v = dist(rng);
}

inline hbpn::TensorPtr random_tensor(hbpn::Shape4 s, std::mt19937& rng,
                                     bool requires_grad = false,
                                     float lo = -1.0f, float hi = 1.0f) {
  auto t = hbpn::make_tensor(s, requires_grad);
  fill_uniform(*t, rng, lo, hi);
  return t;
}

inline double rel_diff(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-12});
  return std::fabs(a - b) / denom;
}

inline double max_rel_diff(const std::vector<float>& a,
                           const std::vector<float>& b) {
  double worst = 0.0;
  double scale = 1e-12;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::fabs(static_cast<double>(a[i])),
                      std::fabs(static_cast<double>(b[i]))});
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - b[i]) / scale);
  }
  return worst;
}

// unique scratch directory under the system temp root
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("hbpn_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
