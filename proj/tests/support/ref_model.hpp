#pragma once

// Double-precision forward evaluation mirroring the engine wiring, built on
// the serial reference kernels. Finite-difference oracles perturb a single
// parameter element here and compare against the engine's analytic
// gradients.

#include <map>
#include <vector>

#include "hbpn/hourglass.hpp"
#include "hbpn/reference.hpp"

namespace refmodel {

using hbpn::Shape4;
using hbpn::Tensor4;
using hbpn::TensorPtr;

struct DTensor {
  Shape4 shape;
  std::vector<double> data;
};

// One coordinate of one engine tensor nudged by delta.
struct Perturb {
  const Tensor4* target = nullptr;
  std::int64_t index = 0;
  double delta = 0.0;
};

inline DTensor materialize(const TensorPtr& t, const Perturb& p) {
  DTensor d;
  d.shape = t->shape;
  d.data.assign(t->data.begin(), t->data.end());
  if (p.target == t.get()) d.data[p.index] += p.delta;
  return d;
}

inline DTensor conv2d(const DTensor& x, const DTensor& w, const DTensor& b,
                      const hbpn::ConvSpec& s) {
  DTensor y;
  y.shape = Shape4{x.shape.n, s.out_channels,
                   (x.shape.h + 2 * s.padding - s.kernel) / s.stride + 1,
                   (x.shape.w + 2 * s.padding - s.kernel) / s.stride + 1};
  y.data.resize(y.shape.numel());
  hbpn::reference::conv2d_fwd(x.data.data(), x.shape.n, x.shape.c, x.shape.h,
                              x.shape.w, w.data.data(), b.data.data(),
                              s.out_channels, s.kernel, s.stride, s.padding,
                              y.data.data());
  return y;
}

inline DTensor deconv2d(const DTensor& x, const DTensor& w, const DTensor& b,
                        const hbpn::ConvSpec& s) {
  DTensor y;
  y.shape = Shape4{x.shape.n, s.out_channels,
                   (x.shape.h - 1) * s.stride - 2 * s.padding + s.kernel,
                   (x.shape.w - 1) * s.stride - 2 * s.padding + s.kernel};
  y.data.resize(y.shape.numel());
  hbpn::reference::deconv2d_fwd(x.data.data(), x.shape.n, x.shape.c, x.shape.h,
                                x.shape.w, w.data.data(), b.data.data(),
                                s.out_channels, s.kernel, s.stride, s.padding,
                                y.data.data());
  return y;
}

inline DTensor prelu(const DTensor& x, const DTensor& slopes) {
  DTensor y;
  y.shape = x.shape;
  y.data.resize(x.data.size());
  hbpn::reference::prelu_fwd(x.data.data(), slopes.data.data(), x.shape.n,
                             x.shape.c, x.shape.h * x.shape.w, y.data.data());
  return y;
}

inline DTensor add(const DTensor& a, const DTensor& b) {
  DTensor y = a;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
  return y;
}

inline DTensor sub(const DTensor& a, const DTensor& b) {
  DTensor y = a;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] -= b.data[i];
  return y;
}

inline double mse(const DTensor& pred, const DTensor& target) {
  return hbpn::reference::mse_loss(pred.data.data(), target.data.data(),
                                   static_cast<std::int64_t>(pred.data.size()));
}

inline double l1(const DTensor& pred, const DTensor& target) {
  return hbpn::reference::l1_loss(pred.data.data(), target.data.data(),
                                  static_cast<std::int64_t>(pred.data.size()));
}

struct LayerEval {
  const Perturb& p;

  DTensor conv(const hbpn::nn::Conv2d& layer, const DTensor& x) const {
    return conv2d(x, materialize(layer.weight, p), materialize(layer.bias, p),
                  layer.spec);
  }
  DTensor deconv(const hbpn::nn::ConvTranspose2d& layer,
                 const DTensor& x) const {
    return deconv2d(x, materialize(layer.weight, p),
                    materialize(layer.bias, p), layer.spec);
  }
  DTensor act(const hbpn::nn::PReLU& layer, const DTensor& x) const {
    return prelu(x, materialize(layer.slopes, p));
  }
};

inline DTensor block_forward(const hbpn::BackProjectionBlock& blk,
                             const DTensor& x, const Perturb& p) {
  const LayerEval ev{p};
  if (blk.dir == hbpn::BlockDir::UBP) {
    const DTensor u = ev.act(blk.act_main, ev.deconv(blk.up_main, x));
    const DTensor main_path = ev.conv(blk.omega1x1, u);
    const DTensor back = ev.act(blk.act_mirror, ev.conv(blk.down_main, u));
    const DTensor resid = sub(ev.conv(blk.lambda1x1, x), back);
    const DTensor corr = ev.act(blk.act_second, ev.deconv(blk.up_second, resid));
    return add(main_path, corr);
  }
  const DTensor d = ev.act(blk.act_main, ev.conv(blk.down_main, x));
  const DTensor main_path = ev.conv(blk.omega1x1, d);
  const DTensor back = ev.act(blk.act_mirror, ev.deconv(blk.up_main, d));
  const DTensor resid = sub(ev.conv(blk.lambda1x1, x), back);
  const DTensor corr = ev.act(blk.act_second, ev.conv(blk.down_second, resid));
  return add(main_path, corr);
}

struct HgOut {
  DTensor features, coarse, weight_map;
};

inline HgOut hg_forward(const hbpn::HourGlassModule& m, const DTensor& x,
                        const Perturb& p) {
  const LayerEval ev{p};
  std::vector<DTensor> downs;
  DTensor cur = x;
  for (int i = 0; i < m.depth; ++i) {
    cur = block_forward(m.dbp[i], cur, p);
    downs.push_back(cur);
  }
  for (int j = 0; j < m.depth; ++j) {
    cur = add(cur, ev.conv(m.local_shortcuts[j], downs[m.depth - 1 - j]));
    cur = block_forward(m.ubp[j], cur, p);
  }
  HgOut out;
  out.coarse = ev.conv(m.coarse_head, cur);
  out.weight_map = ev.conv(m.weight_head, cur);
  out.features = std::move(cur);
  return out;
}

inline DTensor wr_combine(const std::vector<DTensor>& coarse,
                          const std::vector<DTensor>& wmaps) {
  const std::size_t K = coarse.size();
  DTensor out;
  out.shape = coarse[0].shape;
  out.data.assign(coarse[0].data.size(), 0.0);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double mx = wmaps[0].data[i];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, wmaps[k].data[i]);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(wmaps[k].data[i] - mx);
    for (std::size_t k = 0; k < K; ++k) {
      out.data[i] += std::exp(wmaps[k].data[i] - mx) / sum * coarse[k].data[i];
    }
  }
  return out;
}

inline DTensor model_forward(const hbpn::HBPNModel& model, const TensorPtr& input,
                             const Perturb& p) {
  const LayerEval ev{p};
  DTensor cur = ev.act(model.feature_act,
                       ev.conv(model.feature_head, materialize(input, p)));
  std::vector<DTensor> coarse, wmaps;
  for (std::size_t k = 0; k < model.modules.size(); ++k) {
    const DTensor module_in = cur;
    HgOut hg = hg_forward(model.modules[k], module_in, p);
    coarse.push_back(std::move(hg.coarse));
    wmaps.push_back(std::move(hg.weight_map));
    if (k + 1 < model.modules.size()) {
      cur = add(hg.features, ev.conv(model.global_shortcuts[k], module_in));
    }
  }
  if (model.cfg.head == hbpn::HeadKind::WR) return wr_combine(coarse, wmaps);
  // plain head: channel concat then conv
  DTensor cat;
  cat.shape = Shape4{coarse[0].shape.n,
                     static_cast<int>(coarse.size()) * coarse[0].shape.c,
                     coarse[0].shape.h, coarse[0].shape.w};
  cat.data.resize(cat.shape.numel());
  const std::int64_t plane =
      static_cast<std::int64_t>(coarse[0].shape.h) * coarse[0].shape.w;
  const std::int64_t part = static_cast<std::int64_t>(coarse[0].shape.c) * plane;
  for (int b = 0; b < cat.shape.n; ++b) {
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      std::copy_n(coarse[k].data.begin() + b * part, part,
                  cat.data.begin() +
                      (static_cast<std::int64_t>(b) * coarse.size() + k) * part);
    }
  }
  return ev.conv(model.plain_head, cat);
}

}  // namespace refmodel
