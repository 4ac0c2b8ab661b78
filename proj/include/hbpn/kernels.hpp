#pragma once

// Parallel float kernels behind the autodiff ops. All loops parallelize over
// independent output elements and keep a fixed per-element accumulation
// order, so results are bit-identical for any OpenMP thread count.

#include "hbpn/tensor.hpp"

namespace hbpn::kernels {

void set_threads(int n);  // 0 keeps the OpenMP default

void conv2d_fwd(const float* x, Shape4 xs, const float* w, const float* bias,
                const ConvSpec& spec, float* y);
void conv2d_bwd_input(const float* dy, Shape4 xs, const float* w,
                      const ConvSpec& spec, float* dx_accum);
void conv2d_bwd_params(const float* dy, const float* x, Shape4 xs,
                       const ConvSpec& spec, float* dw_accum, float* db_accum);

void deconv2d_fwd(const float* x, Shape4 xs, const float* w, const float* bias,
                  const ConvSpec& spec, float* y);
void deconv2d_bwd_input(const float* dy, Shape4 xs, const float* w,
                        const ConvSpec& spec, float* dx_accum);
void deconv2d_bwd_params(const float* dy, const float* x, Shape4 xs,
                         const ConvSpec& spec, float* dw_accum,
                         float* db_accum);

void prelu_fwd(const float* x, const float* slopes, int n, int c, int hw,
               float* y);
void prelu_bwd(const float* dy, const float* x, const float* slopes, int n,
               int c, int hw, float* dx_accum, float* dslope_accum);

void softmax_axis_fwd(const float* x, Shape4 s, int axis, float* y);
// dx += softmax backward given the forward output y
void softmax_axis_bwd(const float* dy, const float* y, Shape4 s, int axis,
                      float* dx_accum);

void add(const float* a, const float* b, std::int64_t count, float* y);
void sub(const float* a, const float* b, std::int64_t count, float* y);
void mul(const float* a, const float* b, std::int64_t count, float* y);
void axpy(float alpha, const float* x, std::int64_t count, float* y_accum);
void mul_accum(const float* a, const float* b, std::int64_t count,
               float* y_accum);

double mse_loss(const float* a, const float* b, std::int64_t count);
double l1_loss(const float* a, const float* b, std::int64_t count);

bool all_finite(const float* x, std::int64_t count);

}  // namespace hbpn::kernels
