#pragma once

// Plain serial kernels, templated on the scalar type. These are the readable
// reference implementations the parallel kernels in kernels.cpp are checked
// against; the double instantiation also backs the finite-difference oracles
// in the test suite.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hbpn/tensor.hpp"

namespace hbpn::reference {

template <typename T>
void conv2d_fwd(const T* x, int n, int ic, int ih, int iw, const T* w,
                const T* bias, int oc, int k, int s, int p, T* y) {
  const int oh = (ih + 2 * p - k) / s + 1;
  const int ow = (iw + 2 * p - k) / s + 1;
  for (int b = 0; b < n; ++b) {
    for (int o = 0; o < oc; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T acc = bias ? bias[o] : T(0);
          for (int ci = 0; ci < ic; ++ci) {
            for (int kh = 0; kh < k; ++kh) {
              const int iy = oy * s - p + kh;
              if (iy < 0 || iy >= ih) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int ix = ox * s - p + kw;
                if (ix < 0 || ix >= iw) continue;
                acc += x[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix] *
                       w[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw];
              }
            }
          }
          y[((static_cast<std::int64_t>(b) * oc + o) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

// Gather form: each input-gradient element sums over the outputs it fed.
template <typename T>
void conv2d_bwd_input(const T* dy, int n, int ic, int ih, int iw, const T* w,
                      int oc, int k, int s, int p, T* dx_accum) {
  const int oh = (ih + 2 * p - k) / s + 1;
  const int ow = (iw + 2 * p - k) / s + 1;
  for (int b = 0; b < n; ++b) {
    for (int ci = 0; ci < ic; ++ci) {
      for (int iy = 0; iy < ih; ++iy) {
        for (int ix = 0; ix < iw; ++ix) {
          T acc = 0;
          for (int o = 0; o < oc; ++o) {
            for (int kh = 0; kh < k; ++kh) {
              const int ny = iy + p - kh;
              if (ny < 0 || ny % s != 0) continue;
              const int oy = ny / s;
              if (oy >= oh) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int nx = ix + p - kw;
                if (nx < 0 || nx % s != 0) continue;
                const int ox = nx / s;
                if (ox >= ow) continue;
                acc += dy[((static_cast<std::int64_t>(b) * oc + o) * oh + oy) * ow + ox] *
                       w[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw];
              }
            }
          }
          dx_accum[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_bwd_params(const T* dy, const T* x, int n, int ic, int ih, int iw,
                       int oc, int k, int s, int p, T* dw_accum, T* db_accum) {
  const int oh = (ih + 2 * p - k) / s + 1;
  const int ow = (iw + 2 * p - k) / s + 1;
  for (int o = 0; o < oc; ++o) {
    for (int ci = 0; ci < ic; ++ci) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          T acc = 0;
          for (int b = 0; b < n; ++b) {
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s - p + kh;
              if (iy < 0 || iy >= ih) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * s - p + kw;
                if (ix < 0 || ix >= iw) continue;
                acc += dy[((static_cast<std::int64_t>(b) * oc + o) * oh + oy) * ow + ox] *
                       x[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix];
              }
            }
          }
          dw_accum[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw] += acc;
        }
      }
    }
  }
  if (db_accum) {
    for (int o = 0; o < oc; ++o) {
      T acc = 0;
      for (int b = 0; b < n; ++b) {
        const T* row = dy + (static_cast<std::int64_t>(b) * oc + o) * oh * ow;
        for (int l = 0; l < oh * ow; ++l) acc += row[l];
      }
      db_accum[o] += acc;
    }
  }
}

// Transposed convolution in gather form. Weights are (out, in, k, k) in the
// transposed op's own channel convention.
template <typename T>
void deconv2d_fwd(const T* x, int n, int ic, int ih, int iw, const T* w,
                  const T* bias, int oc, int k, int s, int p, T* y) {
  const int oh = (ih - 1) * s - 2 * p + k;
  const int ow = (iw - 1) * s - 2 * p + k;
  for (int b = 0; b < n; ++b) {
    for (int o = 0; o < oc; ++o) {
      for (int yy = 0; yy < oh; ++yy) {
        for (int yx = 0; yx < ow; ++yx) {
          T acc = bias ? bias[o] : T(0);
          for (int ci = 0; ci < ic; ++ci) {
            for (int kh = 0; kh < k; ++kh) {
              const int ny = yy + p - kh;
              if (ny < 0 || ny % s != 0) continue;
              const int iy = ny / s;
              if (iy >= ih) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int nx = yx + p - kw;
                if (nx < 0 || nx % s != 0) continue;
                const int ix = nx / s;
                if (ix >= iw) continue;
                acc += x[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix] *
                       w[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw];
              }
            }
          }
          y[((static_cast<std::int64_t>(b) * oc + o) * oh + yy) * ow + yx] = acc;
        }
      }
    }
  }
}

template <typename T>
void deconv2d_bwd_input(const T* dy, int n, int ic, int ih, int iw, const T* w,
                        int oc, int k, int s, int p, T* dx_accum) {
  const int oh = (ih - 1) * s - 2 * p + k;
  const int ow = (iw - 1) * s - 2 * p + k;
  for (int b = 0; b < n; ++b) {
    for (int ci = 0; ci < ic; ++ci) {
      for (int iy = 0; iy < ih; ++iy) {
        for (int ix = 0; ix < iw; ++ix) {
          T acc = 0;
          for (int o = 0; o < oc; ++o) {
            for (int kh = 0; kh < k; ++kh) {
              const int yy = iy * s - p + kh;
              if (yy < 0 || yy >= oh) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int yx = ix * s - p + kw;
                if (yx < 0 || yx >= ow) continue;
                acc += dy[((static_cast<std::int64_t>(b) * oc + o) * oh + yy) * ow + yx] *
                       w[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw];
              }
            }
          }
          dx_accum[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix] += acc;
        }
      }
    }
  }
}

template <typename T>
void deconv2d_bwd_params(const T* dy, const T* x, int n, int ic, int ih,
                         int iw, int oc, int k, int s, int p, T* dw_accum,
                         T* db_accum) {
  const int oh = (ih - 1) * s - 2 * p + k;
  const int ow = (iw - 1) * s - 2 * p + k;
  for (int o = 0; o < oc; ++o) {
    for (int ci = 0; ci < ic; ++ci) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          T acc = 0;
          for (int b = 0; b < n; ++b) {
            for (int iy = 0; iy < ih; ++iy) {
              const int yy = iy * s - p + kh;
              if (yy < 0 || yy >= oh) continue;
              for (int ix = 0; ix < iw; ++ix) {
                const int yx = ix * s - p + kw;
                if (yx < 0 || yx >= ow) continue;
                acc += x[((static_cast<std::int64_t>(b) * ic + ci) * ih + iy) * iw + ix] *
                       dy[((static_cast<std::int64_t>(b) * oc + o) * oh + yy) * ow + yx];
              }
            }
          }
          dw_accum[((static_cast<std::int64_t>(o) * ic + ci) * k + kh) * k + kw] += acc;
        }
      }
    }
  }
  if (db_accum) {
    for (int o = 0; o < oc; ++o) {
      T acc = 0;
      for (int b = 0; b < n; ++b) {
        const T* row = dy + (static_cast<std::int64_t>(b) * oc + o) * oh * ow;
        for (int l = 0; l < oh * ow; ++l) acc += row[l];
      }
      db_accum[o] += acc;
    }
  }
}

template <typename T>
void prelu_fwd(const T* x, const T* slopes, int n, int c, int hw, T* y) {
  for (int b = 0; b < n; ++b) {
    for (int ci = 0; ci < c; ++ci) {
      const T a = slopes[ci];
      const T* xi = x + (static_cast<std::int64_t>(b) * c + ci) * hw;
      T* yi = y + (static_cast<std::int64_t>(b) * c + ci) * hw;
      for (int l = 0; l < hw; ++l) yi[l] = xi[l] > T(0) ? xi[l] : a * xi[l];
    }
  }
}

template <typename T>
void prelu_bwd(const T* dy, const T* x, const T* slopes, int n, int c, int hw,
               T* dx_accum, T* dslope_accum) {
  for (int b = 0; b < n; ++b) {
    for (int ci = 0; ci < c; ++ci) {
      const T a = slopes[ci];
      const std::int64_t off = (static_cast<std::int64_t>(b) * c + ci) * hw;
      if (dx_accum) {
        for (int l = 0; l < hw; ++l) {
          dx_accum[off + l] += dy[off + l] * (x[off + l] > T(0) ? T(1) : a);
        }
      }
    }
  }
  if (dslope_accum) {
    for (int ci = 0; ci < c; ++ci) {
      T acc = 0;
      for (int b = 0; b < n; ++b) {
        const std::int64_t off = (static_cast<std::int64_t>(b) * c + ci) * hw;
        for (int l = 0; l < hw; ++l) {
          if (x[off + l] <= T(0)) acc += dy[off + l] * x[off + l];
        }
      }
      dslope_accum[ci] += acc;
    }
  }
}

// Softmax along one axis of an (n,c,h,w) array, max-subtracted.
template <typename T>
void softmax_axis_fwd(const T* x, Shape4 s, int axis, T* y) {
  const int dims[4] = {s.n, s.c, s.h, s.w};
  const std::int64_t strides[4] = {
      static_cast<std::int64_t>(s.c) * s.h * s.w,
      static_cast<std::int64_t>(s.h) * s.w, s.w, 1};
  const int len = dims[axis];
  const std::int64_t stride = strides[axis];
  // iterate over all positions with the axis index fixed at 0
  int other[3];
  int nother = 0;
  for (int d = 0; d < 4; ++d)
    if (d != axis) other[nother++] = d;
  for (int i0 = 0; i0 < dims[other[0]]; ++i0) {
    for (int i1 = 0; i1 < dims[other[1]]; ++i1) {
      for (int i2 = 0; i2 < dims[other[2]]; ++i2) {
        const std::int64_t base = i0 * strides[other[0]] +
                                  i1 * strides[other[1]] +
                                  i2 * strides[other[2]];
        T mx = x[base];
        for (int j = 1; j < len; ++j) mx = std::max(mx, x[base + j * stride]);
        T sum = 0;
        for (int j = 0; j < len; ++j) {
          const T e = std::exp(x[base + j * stride] - mx);
          y[base + j * stride] = e;
          sum += e;
        }
        for (int j = 0; j < len; ++j) y[base + j * stride] /= sum;
      }
    }
  }
}

template <typename T>
double mse_loss(const T* a, const T* b, std::int64_t count) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(count);
}

template <typename T>
double l1_loss(const T* a, const T* b, std::int64_t count) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return acc / static_cast<double>(count);
}

}  // namespace hbpn::reference
