#include "hbpn/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "hbpn/kernels.hpp"

namespace hbpn::ad {

namespace {

void check_finite(const Tensor4& t, const char* op) {
  if (!kernels::all_finite(t.data.data(), t.numel())) {
    throw NumericError(std::string(op) + ": non-finite value in output " +
                       t.shape.str());
  }
}

bool wants_grad(const TensorPtr& t) { return t && t->requires_grad; }

TensorPtr result_of(std::initializer_list<TensorPtr> inputs, Shape4 shape) {
  bool rg = false;
  for (const auto& t : inputs) rg = rg || wants_grad(t);
  return make_tensor(shape, rg);
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b,
                        const char* op) {
  if (!(a->shape == b->shape)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a->shape.str() +
                     " vs " + b->shape.str());
  }
}

}  // namespace

void Tape::record(std::vector<TensorPtr> inputs, TensorPtr output,
                  std::function<void()> backward) {
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + loss->shape.str());
  }
  bool found = false;
  for (auto& n : nodes_) {
    n.output->ensure_grad();
    n.output->zero_grad();
    if (n.output == loss) found = true;
  }
  if (!found) {
    throw ShapeError("backward: loss was not produced on this tape");
  }
  loss->grad[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->bw) it->bw();
  }
}

void Tape::clear() { nodes_.clear(); }

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& weight,
                 const TensorPtr& bias, const ConvSpec& spec) {
  spec.validate();
  const Shape4 ys{x->shape.n, spec.out_channels,
                  conv_out_extent(x->shape.h, spec, "h"),
                  conv_out_extent(x->shape.w, spec, "w")};
  auto y = result_of({x, weight, bias}, ys);
  kernels::conv2d_fwd(x->data.data(), x->shape, weight->data.data(),
                      bias ? bias->data.data() : nullptr, spec,
                      y->data.data());
  check_finite(*y, "conv2d");
  if (tape && y->requires_grad) {
    tape->record({x, weight, bias}, y, [x, weight, bias, spec, y]() {
      if (x->requires_grad) {
        x->ensure_grad();
        kernels::conv2d_bwd_input(y->grad.data(), x->shape,
                                  weight->data.data(), spec, x->grad.data());
      }
      if (weight->requires_grad || (bias && bias->requires_grad)) {
        weight->ensure_grad();
        if (bias) bias->ensure_grad();
        kernels::conv2d_bwd_params(y->grad.data(), x->data.data(), x->shape,
                                   spec, weight->grad.data(),
                                   bias ? bias->grad.data() : nullptr);
      }
    });
  }
  return y;
}

TensorPtr conv_transpose2d(Tape* tape, const TensorPtr& x,
                           const TensorPtr& weight, const TensorPtr& bias,
                           const ConvSpec& spec) {
  spec.validate();
  const Shape4 ys{x->shape.n, spec.out_channels,
                  deconv_out_extent(x->shape.h, spec, "h"),
                  deconv_out_extent(x->shape.w, spec, "w")};
  auto y = result_of({x, weight, bias}, ys);
  kernels::deconv2d_fwd(x->data.data(), x->shape, weight->data.data(),
                        bias ? bias->data.data() : nullptr, spec,
                        y->data.data());
  check_finite(*y, "conv_transpose2d");
  if (tape && y->requires_grad) {
    tape->record({x, weight, bias}, y, [x, weight, bias, spec, y]() {
      if (x->requires_grad) {
        x->ensure_grad();
        kernels::deconv2d_bwd_input(y->grad.data(), x->shape,
                                    weight->data.data(), spec, x->grad.data());
      }
      if (weight->requires_grad || (bias && bias->requires_grad)) {
        weight->ensure_grad();
        if (bias) bias->ensure_grad();
        kernels::deconv2d_bwd_params(y->grad.data(), x->data.data(), x->shape,
                                     spec, weight->grad.data(),
                                     bias ? bias->grad.data() : nullptr);
      }
    });
  }
  return y;
}

TensorPtr prelu(Tape* tape, const TensorPtr& x, const TensorPtr& slopes) {
  if (slopes->numel() != x->shape.c) {
    throw ShapeError("prelu: " + std::to_string(slopes->numel()) +
                     " slopes for c=" + std::to_string(x->shape.c));
  }
  auto y = result_of({x, slopes}, x->shape);
  const int hw = x->shape.h * x->shape.w;
  kernels::prelu_fwd(x->data.data(), slopes->data.data(), x->shape.n,
                     x->shape.c, hw, y->data.data());
  check_finite(*y, "prelu");
  if (tape && y->requires_grad) {
    tape->record({x, slopes}, y, [x, slopes, y, hw]() {
      if (x->requires_grad) x->ensure_grad();
      if (slopes->requires_grad) slopes->ensure_grad();
      kernels::prelu_bwd(y->grad.data(), x->data.data(), slopes->data.data(),
                         x->shape.n, x->shape.c, hw,
                         x->requires_grad ? x->grad.data() : nullptr,
                         slopes->requires_grad ? slopes->grad.data() : nullptr);
    });
  }
  return y;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto y = result_of({a, b}, a->shape);
  kernels::add(a->data.data(), b->data.data(), a->numel(), y->data.data());
  check_finite(*y, "add");
  if (tape && y->requires_grad) {
    tape->record({a, b}, y, [a, b, y]() {
      for (const auto& t : {a, b}) {
        if (t->requires_grad) {
          t->ensure_grad();
          kernels::axpy(1.0f, y->grad.data(), t->numel(), t->grad.data());
        }
      }
    });
  }
  return y;
}

TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "sub");
  auto y = result_of({a, b}, a->shape);
  kernels::sub(a->data.data(), b->data.data(), a->numel(), y->data.data());
  check_finite(*y, "sub");
  if (tape && y->requires_grad) {
    tape->record({a, b}, y, [a, b, y]() {
      if (a->requires_grad) {
        a->ensure_grad();
        kernels::axpy(1.0f, y->grad.data(), a->numel(), a->grad.data());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kernels::axpy(-1.0f, y->grad.data(), b->numel(), b->grad.data());
      }
    });
  }
  return y;
}

TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mul");
  auto y = result_of({a, b}, a->shape);
  kernels::mul(a->data.data(), b->data.data(), a->numel(), y->data.data());
  check_finite(*y, "mul");
  if (tape && y->requires_grad) {
    tape->record({a, b}, y, [a, b, y]() {
      if (a->requires_grad) {
        a->ensure_grad();
        kernels::mul_accum(y->grad.data(), b->data.data(), a->numel(),
                           a->grad.data());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kernels::mul_accum(y->grad.data(), a->data.data(), b->numel(),
                           b->grad.data());
      }
    });
  }
  return y;
}

TensorPtr concat(Tape* tape, const std::vector<TensorPtr>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) {
    throw ShapeError("concat: axis must be 0 or 1, got " + std::to_string(axis));
  }
  Shape4 s = parts[0]->shape;
  int total = 0;
  for (const auto& p : parts) {
    const Shape4 ps = p->shape;
    if (ps.h != s.h || ps.w != s.w || (axis == 0 ? ps.c != s.c : ps.n != s.n)) {
      throw ShapeError("concat: incompatible part shape " + ps.str() +
                       " vs " + s.str());
    }
    total += (axis == 0) ? ps.n : ps.c;
  }
  Shape4 ys = s;
  (axis == 0 ? ys.n : ys.c) = total;
  bool rg = false;
  for (const auto& p : parts) rg = rg || p->requires_grad;
  auto y = make_tensor(ys, rg);

  // both axes reduce to copying contiguous per-batch runs
  const std::int64_t plane = static_cast<std::int64_t>(s.h) * s.w;
  if (axis == 0) {
    std::int64_t off = 0;
    for (const auto& p : parts) {
      std::memcpy(y->data.data() + off, p->data.data(),
                  sizeof(float) * p->numel());
      off += p->numel();
    }
  } else {
    const std::int64_t yrow = static_cast<std::int64_t>(ys.c) * plane;
    std::int64_t coff = 0;
    for (const auto& p : parts) {
      const std::int64_t prow = static_cast<std::int64_t>(p->shape.c) * plane;
      for (int b = 0; b < s.n; ++b) {
        std::memcpy(y->data.data() + b * yrow + coff * plane,
                    p->data.data() + b * prow, sizeof(float) * prow);
      }
      coff += p->shape.c;
    }
  }
  if (tape && rg) {
    std::vector<TensorPtr> inputs = parts;
    tape->record(inputs, y, [parts, y, axis, plane]() {
      if (axis == 0) {
        std::int64_t off = 0;
        for (const auto& p : parts) {
          if (p->requires_grad) {
            p->ensure_grad();
            kernels::axpy(1.0f, y->grad.data() + off, p->numel(),
                          p->grad.data());
          }
          off += p->numel();
        }
      } else {
        const std::int64_t yrow =
            static_cast<std::int64_t>(y->shape.c) * plane;
        std::int64_t coff = 0;
        for (const auto& p : parts) {
          const std::int64_t prow =
              static_cast<std::int64_t>(p->shape.c) * plane;
          if (p->requires_grad) {
            p->ensure_grad();
            for (int b = 0; b < p->shape.n; ++b) {
              kernels::axpy(1.0f, y->grad.data() + b * yrow + coff * plane,
                            prow, p->grad.data() + b * prow);
            }
          }
          coff += p->shape.c;
        }
      }
    });
  }
  return y;
}

TensorPtr softmax_over_axis(Tape* tape, const TensorPtr& x, int axis) {
  auto y = result_of({x}, x->shape);
  kernels::softmax_axis_fwd(x->data.data(), x->shape, axis, y->data.data());
  check_finite(*y, "softmax");
  if (tape && y->requires_grad) {
    tape->record({x}, y, [x, y, axis]() {
      if (!x->requires_grad) return;
      x->ensure_grad();
      kernels::softmax_axis_bwd(y->grad.data(), y->data.data(), x->shape, axis,
                                x->grad.data());
    });
  }
  return y;
}

TensorPtr sum_axis0(Tape* tape, const TensorPtr& x) {
  const Shape4 ys{1, x->shape.c, x->shape.h, x->shape.w};
  auto y = result_of({x}, ys);
  const std::int64_t row = ys.numel();
  std::memcpy(y->data.data(), x->data.data(), sizeof(float) * row);
  for (int b = 1; b < x->shape.n; ++b) {
    kernels::axpy(1.0f, x->data.data() + b * row, row, y->data.data());
  }
  check_finite(*y, "sum_axis0");
  if (tape && y->requires_grad) {
    tape->record({x}, y, [x, y, row]() {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (int b = 0; b < x->shape.n; ++b) {
        kernels::axpy(1.0f, y->grad.data(), row, x->grad.data() + b * row);
      }
    });
  }
  return y;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape4 target) {
  if (target.numel() != x->numel()) {
    throw ShapeError("reshape: " + x->shape.str() + " has " +
                     std::to_string(x->numel()) + " elements, target " +
                     target.str() + " has " + std::to_string(target.numel()));
  }
  auto y = result_of({x}, target);
  std::memcpy(y->data.data(), x->data.data(), sizeof(float) * x->numel());
  if (tape && y->requires_grad) {
    tape->record({x}, y, [x, y]() {
      if (!x->requires_grad) return;
      x->ensure_grad();
      kernels::axpy(1.0f, y->grad.data(), x->numel(), x->grad.data());
    });
  }
  return y;
}

TensorPtr mse_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target) {
  require_same_shape(pred, target, "mse_loss");
  auto y = result_of({pred, target}, Shape4{1, 1, 1, 1});
  y->data[0] = static_cast<float>(
      kernels::mse_loss(pred->data.data(), target->data.data(), pred->numel()));
  check_finite(*y, "mse_loss");
  if (tape && y->requires_grad) {
    tape->record({pred, target}, y, [pred, target, y]() {
      const float scale = 2.0f / static_cast<float>(pred->numel());
      const float g = y->grad[0];
      if (pred->requires_grad) {
        pred->ensure_grad();
        const std::int64_t count = pred->numel();
        float* dp = pred->grad.data();
        const float* p = pred->data.data();
        const float* t = target->data.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
          dp[i] += g * scale * (p[i] - t[i]);
        }
      }
      if (target->requires_grad) {
        target->ensure_grad();
        const std::int64_t count = target->numel();
        float* dt = target->grad.data();
        const float* p = pred->data.data();
        const float* t = target->data.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
          dt[i] -= g * scale * (p[i] - t[i]);
        }
      }
    });
  }
  return y;
}

TensorPtr l1_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target) {
  require_same_shape(pred, target, "l1_loss");
  auto y = result_of({pred, target}, Shape4{1, 1, 1, 1});
  y->data[0] = static_cast<float>(
      kernels::l1_loss(pred->data.data(), target->data.data(), pred->numel()));
  check_finite(*y, "l1_loss");
  if (tape && y->requires_grad) {
    tape->record({pred, target}, y, [pred, target, y]() {
      const float scale = 1.0f / static_cast<float>(pred->numel());
      const float g = y->grad[0];
      if (pred->requires_grad) {
        pred->ensure_grad();
        const std::int64_t count = pred->numel();
        float* dp = pred->grad.data();
        const float* p = pred->data.data();
        const float* t = target->data.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
          const float d = p[i] - t[i];
          dp[i] += g * scale * (d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f));
        }
      }
      if (target->requires_grad) {
        target->ensure_grad();
        const std::int64_t count = target->numel();
        float* dt = target->grad.data();
        const float* p = pred->data.data();
        const float* t = target->data.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
          const float d = p[i] - t[i];
          dt[i] -= g * scale * (d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f));
        }
      }
    });
  }
  return y;
}

}  // namespace hbpn::ad
