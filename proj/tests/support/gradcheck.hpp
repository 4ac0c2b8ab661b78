#pragma once

// Central-difference gradient checking: step 1e-3, relative tolerance 1e-3.
// The loss is evaluated through the double-precision reference model so the
// finite differences carry no float32 noise; the engine's analytic float
// gradients are compared against them.
//
// PReLU kinks make the loss only piecewise smooth: a coordinate whose
// perturbation interval straddles a kink has no trustworthy finite
// difference. Such coordinates are detected by comparing the central
// differences at step h and h/2 (they agree to O(h^2) on smooth stretches
// and to O(h) across a kink) and are resampled.

#include <functional>
#include <random>

#include "support/ref_model.hpp"

namespace gradcheck {

constexpr double kStep = 1e-3;
constexpr double kTol = 1e-3;

// Evaluates the reference loss under a single-coordinate perturbation.
using RefLossFn = std::function<double(const refmodel::Perturb&)>;

struct Result {
  double max_rel = 0.0;
  std::int64_t checked = 0;
  std::int64_t skipped_kinks = 0;
};

// Compares engine gradients already stored in `tensors` (after a backward
// pass seeded with d(loss)=1) against central differences of `ref_loss`.
inline Result check_tensors(const std::vector<hbpn::TensorPtr>& tensors,
                            const RefLossFn& ref_loss, std::mt19937& rng,
                            int samples_per_tensor = 16) {
  double gmax = 1e-12;
  for (const auto& t : tensors) {
    for (const float g : t->grad) {
      gmax = std::max(gmax, std::fabs(static_cast<double>(g)));
    }
  }
  Result res;
  for (const auto& t : tensors) {
    const std::int64_t n = t->numel();
    const int samples =
        static_cast<int>(std::min<std::int64_t>(n, samples_per_tensor));
    for (int done = 0; done < samples; ++done) {
      const std::int64_t idx =
          samples == n ? done : static_cast<std::int64_t>(rng() % n);
      const double fd = (ref_loss(refmodel::Perturb{t.get(), idx, kStep}) -
                         ref_loss(refmodel::Perturb{t.get(), idx, -kStep})) /
                        (2.0 * kStep);
      const double fd_half =
          (ref_loss(refmodel::Perturb{t.get(), idx, kStep / 2}) -
           ref_loss(refmodel::Perturb{t.get(), idx, -kStep / 2})) /
          kStep;
      const double scale = std::max({std::fabs(fd), std::fabs(fd_half),
                                     1e-4 * gmax, 1e-10});
      if (std::fabs(fd - fd_half) > 1e-4 * scale) {
        ++res.skipped_kinks;
        continue;
      }
      const double an = static_cast<double>(t->grad[idx]);
      const double denom =
          std::max({std::fabs(fd), std::fabs(an), 1e-4 * gmax, 1e-10});
      res.max_rel = std::max(res.max_rel, std::fabs(fd - an) / denom);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace gradcheck
