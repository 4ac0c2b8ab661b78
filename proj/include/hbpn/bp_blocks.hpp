#pragma once

// Enhanced back projection blocks. A UBP doubles the spatial extent and
// halves the channel count; a DBP is its mirror. Each block re-projects its
// main-sampled features through the opposite sampler, weights the residual
// against a linear 1x1 lambda map and adds the second-sampled correction to
// the omega-weighted main path.

#include <random>
#include <vector>

#include "hbpn/image.hpp"
#include "hbpn/nn.hpp"

namespace hbpn {

enum class BlockDir { UBP, DBP };

struct BackProjectionBlock {
  BlockDir dir = BlockDir::UBP;
  int in_channels = 0;

  nn::ConvTranspose2d up_main;    // UBP main / DBP mirror sampler
  nn::Conv2d down_main;           // DBP main / UBP mirror sampler
  nn::ConvTranspose2d up_second;  // UBP residual sampler
  nn::Conv2d down_second;         // DBP residual sampler
  nn::Conv2d lambda1x1;           // linear residual weighting
  nn::Conv2d omega1x1;            // linear global weighting, adjusts channels
  nn::PReLU act_main, act_mirror, act_second;

  static BackProjectionBlock make_ubp(int in_channels, std::mt19937& rng);
  static BackProjectionBlock make_dbp(int in_channels, std::mt19937& rng);

  // second_preact, when non-null, receives the input of the final PReLU.
  TensorPtr forward(ad::Tape* tape, const TensorPtr& x,
                    TensorPtr* second_preact = nullptr) const;

  std::int64_t parameter_count() const;
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;
};

TensorPtr ubp_forward(ad::Tape* tape, const TensorPtr& x,
                      const BackProjectionBlock& block,
                      TensorPtr* second_preact = nullptr);
TensorPtr dbp_forward(ad::Tape* tape, const TensorPtr& x,
                      const BackProjectionBlock& block,
                      TensorPtr* second_preact = nullptr);

// Classical iterative back projection on images: the estimate is corrected
// by the up-sampled data-fidelity residual, sr <- sr - lambda * up(down(sr) - lr).
// Down/up are the bicubic resamplers. Returns the refined image; residuals,
// when requested, receive ||down(sr_t) - lr||_2 for t = 0..iterations-1.
ImageRGB classical_back_projection(const ImageRGB& sr, const ImageRGB& lr,
                                   int scale, float lambda, int iterations,
                                   std::vector<double>* residuals = nullptr);

}  // namespace hbpn
