#include "hbpn/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace hbpn::kernels {

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

namespace {

// Scratch buffers are capped at this many floats; spatial loops are tiled
// over output rows to stay under it. Tile boundaries depend only on the
// problem size, never on the thread count, so results are reproducible.
constexpr std::int64_t kColBudget = 4 << 20;

struct ConvDims {
  int n, ic, ih, iw, oc, k, s, p, oh, ow;
  std::int64_t in_plane() const { return static_cast<std::int64_t>(ih) * iw; }
  std::int64_t out_plane() const { return static_cast<std::int64_t>(oh) * ow; }
};

ConvDims conv_dims(Shape4 xs, const ConvSpec& spec) {
  spec.validate();
  if (xs.c != spec.in_channels) {
    throw ShapeError("conv2d: input has c=" + std::to_string(xs.c) +
                     " but spec expects in_channels=" +
                     std::to_string(spec.in_channels));
  }
  ConvDims d{xs.n,        xs.c,        xs.h,         xs.w, spec.out_channels,
             spec.kernel, spec.stride, spec.padding, 0,    0};
  d.oh = conv_out_extent(xs.h, spec, "h");
  d.ow = conv_out_extent(xs.w, spec, "w");
  return d;
}

ConvDims deconv_dims(Shape4 xs, const ConvSpec& spec) {
  spec.validate();
  if (xs.c != spec.in_channels) {
    throw ShapeError("conv_transpose2d: input has c=" + std::to_string(xs.c) +
                     " but spec expects in_channels=" +
                     std::to_string(spec.in_channels));
  }
  ConvDims d{xs.n,        xs.c,        xs.h,         xs.w, spec.out_channels,
             spec.kernel, spec.stride, spec.padding, 0,    0};
  d.oh = deconv_out_extent(xs.h, spec, "h");
  d.ow = deconv_out_extent(xs.w, spec, "w");
  return d;
}

int rows_per_tile(std::int64_t row_floats, int total_rows) {
  const std::int64_t rows = std::max<std::int64_t>(1, kColBudget / std::max<std::int64_t>(1, row_floats));
  return static_cast<int>(std::min<std::int64_t>(rows, total_rows));
}

// col rows kk = (ci*k + kh)*k + kw over output positions [oy0, oy1)
void im2col_kl(const float* x, const ConvDims& d, int oy0, int oy1,
               float* col) {
  const int KK = d.ic * d.k * d.k;
  const std::int64_t L = static_cast<std::int64_t>(oy1 - oy0) * d.ow;
#pragma omp parallel for schedule(static)
  for (int kk = 0; kk < KK; ++kk) {
    const int ci = kk / (d.k * d.k);
    const int kh = (kk / d.k) % d.k;
    const int kw = kk % d.k;
    const float* xc = x + ci * d.in_plane();
    float* row = col + kk * L;
    for (int oy = oy0; oy < oy1; ++oy) {
      const int iy = oy * d.s - d.p + kh;
      float* out = row + static_cast<std::int64_t>(oy - oy0) * d.ow;
      if (iy < 0 || iy >= d.ih) {
        std::memset(out, 0, sizeof(float) * d.ow);
        continue;
      }
      const float* xin = xc + static_cast<std::int64_t>(iy) * d.iw;
      for (int ox = 0; ox < d.ow; ++ox) {
        const int ix = ox * d.s - d.p + kw;
        out[ox] = (ix >= 0 && ix < d.iw) ? xin[ix] : 0.0f;
      }
    }
  }
}

// (oh*ow) x (ic*k*k) layout over the same output-row window
void im2col_lk(const float* x, const ConvDims& d, int oy0, int oy1,
               float* col) {
  const int KK = d.ic * d.k * d.k;
#pragma omp parallel for schedule(static)
  for (int oy = oy0; oy < oy1; ++oy) {
    for (int ox = 0; ox < d.ow; ++ox) {
      float* row = col + (static_cast<std::int64_t>(oy - oy0) * d.ow + ox) * KK;
      for (int ci = 0; ci < d.ic; ++ci) {
        const float* xc = x + ci * d.in_plane();
        for (int kh = 0; kh < d.k; ++kh) {
          const int iy = oy * d.s - d.p + kh;
          float* out = row + (ci * d.k + kh) * d.k;
          if (iy < 0 || iy >= d.ih) {
            std::memset(out, 0, sizeof(float) * d.k);
            continue;
          }
          const float* xin = xc + static_cast<std::int64_t>(iy) * d.iw;
          for (int kw = 0; kw < d.k; ++kw) {
            const int ix = ox * d.s - d.p + kw;
            out[kw] = (ix >= 0 && ix < d.iw) ? xin[ix] : 0.0f;
          }
        }
      }
    }
  }
}

}  // namespace

void conv2d_fwd(const float* x, Shape4 xs, const float* w, const float* bias,
                const ConvSpec& spec, float* y) {
  const ConvDims d = conv_dims(xs, spec);
  const int KK = d.ic * d.k * d.k;
  const std::int64_t L = d.out_plane();
  const bool pointwise = (d.k == 1 && d.s == 1 && d.p == 0);
  const int tile = pointwise ? d.oh : rows_per_tile(static_cast<std::int64_t>(KK) * d.ow, d.oh);
  std::vector<float> col;
  if (!pointwise) col.resize(static_cast<std::size_t>(KK) * tile * d.ow);
  for (int b = 0; b < d.n; ++b) {
    const float* xb = x + static_cast<std::int64_t>(b) * d.ic * d.in_plane();
    float* yb = y + static_cast<std::int64_t>(b) * d.oc * L;
    for (int oy0 = 0; oy0 < d.oh; oy0 += tile) {
      const int oy1 = std::min(d.oh, oy0 + tile);
      const std::int64_t tl = static_cast<std::int64_t>(oy1 - oy0) * d.ow;
      const float* cdata = xb;
      if (!pointwise) {
        im2col_kl(xb, d, oy0, oy1, col.data());
        cdata = col.data();
      }
      // y[o, tile] = bias[o] + sum_kk w[o,kk] * col[kk, tile]
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.oc; ++o) {
        float* c = yb + o * L + static_cast<std::int64_t>(oy0) * d.ow;
        const float v = bias ? bias[o] : 0.0f;
        for (std::int64_t l = 0; l < tl; ++l) c[l] = v;
        const float* wrow = w + static_cast<std::int64_t>(o) * KK;
        for (int kk = 0; kk < KK; ++kk) {
          const float a = wrow[kk];
          const float* brow = cdata + static_cast<std::int64_t>(kk) * tl;
          for (std::int64_t l = 0; l < tl; ++l) c[l] += a * brow[l];
        }
      }
    }
  }
}

void conv2d_bwd_input(const float* dy, Shape4 xs, const float* w,
                      const ConvSpec& spec, float* dx_accum) {
  const ConvDims d = conv_dims(xs, spec);
  const int KK = d.ic * d.k * d.k;
  const std::int64_t L = d.out_plane();
  const bool pointwise = (d.k == 1 && d.s == 1 && d.p == 0);
  const int tile = rows_per_tile(static_cast<std::int64_t>(KK) * d.ow, d.oh);
  std::vector<float> colgrad(static_cast<std::size_t>(KK) * tile * d.ow);
  for (int b = 0; b < d.n; ++b) {
    const float* dyb = dy + static_cast<std::int64_t>(b) * d.oc * L;
    float* dxb = dx_accum + static_cast<std::int64_t>(b) * d.ic * d.in_plane();
    for (int oy0 = 0; oy0 < d.oh; oy0 += tile) {
      const int oy1 = std::min(d.oh, oy0 + tile);
      const std::int64_t tl = static_cast<std::int64_t>(oy1 - oy0) * d.ow;
      // colgrad[kk, tile] = sum_o w[o,kk] * dy[o, tile]
#pragma omp parallel for schedule(static)
      for (int kk = 0; kk < KK; ++kk) {
        float* row = colgrad.data() + static_cast<std::int64_t>(kk) * tl;
        std::fill(row, row + tl, 0.0f);
        for (int o = 0; o < d.oc; ++o) {
          const float a = w[static_cast<std::int64_t>(o) * KK + kk];
          const float* g = dyb + o * L + static_cast<std::int64_t>(oy0) * d.ow;
          for (std::int64_t l = 0; l < tl; ++l) row[l] += a * g[l];
        }
      }
      if (pointwise) {
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < d.ic; ++ci) {
          float* dxc = dxb + ci * d.in_plane() + static_cast<std::int64_t>(oy0) * d.ow;
          const float* row = colgrad.data() + static_cast<std::int64_t>(ci) * tl;
          for (std::int64_t l = 0; l < tl; ++l) dxc[l] += row[l];
        }
        continue;
      }
      // scatter; input channels are disjoint across threads
#pragma omp parallel for schedule(static)
      for (int ci = 0; ci < d.ic; ++ci) {
        float* dxc = dxb + ci * d.in_plane();
        for (int kh = 0; kh < d.k; ++kh) {
          for (int kw = 0; kw < d.k; ++kw) {
            const float* row =
                colgrad.data() +
                (static_cast<std::int64_t>(ci * d.k + kh) * d.k + kw) * tl;
            for (int oy = oy0; oy < oy1; ++oy) {
              const int iy = oy * d.s - d.p + kh;
              if (iy < 0 || iy >= d.ih) continue;
              const float* src = row + static_cast<std::int64_t>(oy - oy0) * d.ow;
              float* dst = dxc + static_cast<std::int64_t>(iy) * d.iw;
              for (int ox = 0; ox < d.ow; ++ox) {
                const int ix = ox * d.s - d.p + kw;
                if (ix >= 0 && ix < d.iw) dst[ix] += src[ox];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_bwd_params(const float* dy, const float* x, Shape4 xs,
                       const ConvSpec& spec, float* dw_accum, float* db_accum) {
  const ConvDims d = conv_dims(xs, spec);
  const int KK = d.ic * d.k * d.k;
  const std::int64_t L = d.out_plane();
  const bool pointwise = (d.k == 1 && d.s == 1 && d.p == 0);
  const int tile = pointwise ? d.oh : rows_per_tile(static_cast<std::int64_t>(KK) * d.ow, d.oh);
  std::vector<float> col;
  if (!pointwise) col.resize(static_cast<std::size_t>(tile) * d.ow * KK);
  for (int b = 0; b < d.n; ++b) {
    const float* xb = x + static_cast<std::int64_t>(b) * d.ic * d.in_plane();
    const float* dyb = dy + static_cast<std::int64_t>(b) * d.oc * L;
    for (int oy0 = 0; oy0 < d.oh; oy0 += tile) {
      const int oy1 = std::min(d.oh, oy0 + tile);
      const std::int64_t tl = static_cast<std::int64_t>(oy1 - oy0) * d.ow;
      if (!pointwise) im2col_lk(xb, d, oy0, oy1, col.data());
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.oc; ++o) {
        float* dwo = dw_accum + static_cast<std::int64_t>(o) * KK;
        const float* g = dyb + o * L + static_cast<std::int64_t>(oy0) * d.ow;
        if (pointwise) {
          for (int ci = 0; ci < d.ic; ++ci) {
            const float* xc = xb + ci * L + static_cast<std::int64_t>(oy0) * d.ow;
            float acc = 0.0f;
            for (std::int64_t l = 0; l < tl; ++l) acc += g[l] * xc[l];
            dwo[ci] += acc;
          }
        } else {
          for (std::int64_t l = 0; l < tl; ++l) {
            const float gl = g[l];
            const float* row = col.data() + l * KK;
            for (int kk = 0; kk < KK; ++kk) dwo[kk] += gl * row[kk];
          }
        }
        if (db_accum) {
          float acc = 0.0f;
          for (std::int64_t l = 0; l < tl; ++l) acc += g[l];
          db_accum[o] += acc;
        }
      }
    }
  }
}

namespace {

// dy patches aligned to the transposed op's input grid:
// patch[kk][iy,ix] = dy[o, iy*s-p+kh, ix*s-p+kw], zero outside.
void extract_deconv_patches(const float* dyo, const ConvDims& d, int iy0,
                            int iy1, float* rows) {
  const int k2 = d.k * d.k;
  const std::int64_t tl = static_cast<std::int64_t>(iy1 - iy0) * d.iw;
#pragma omp parallel for schedule(static)
  for (int kk = 0; kk < k2; ++kk) {
    const int kh = kk / d.k;
    const int kw = kk % d.k;
    float* row = rows + static_cast<std::int64_t>(kk) * tl;
    for (int iy = iy0; iy < iy1; ++iy) {
      const int yy = iy * d.s - d.p + kh;
      float* out = row + static_cast<std::int64_t>(iy - iy0) * d.iw;
      if (yy < 0 || yy >= d.oh) {
        std::memset(out, 0, sizeof(float) * d.iw);
        continue;
      }
      const float* src = dyo + static_cast<std::int64_t>(yy) * d.ow;
      for (int ix = 0; ix < d.iw; ++ix) {
        const int yx = ix * d.s - d.p + kw;
        out[ix] = (yx >= 0 && yx < d.ow) ? src[yx] : 0.0f;
      }
    }
  }
}

}  // namespace

void deconv2d_fwd(const float* x, Shape4 xs, const float* w, const float* bias,
                  const ConvSpec& spec, float* y) {
  const ConvDims d = deconv_dims(xs, spec);
  const int k2 = d.k * d.k;
  const std::int64_t Lin = d.in_plane();
  const std::int64_t Lout = d.out_plane();
  const int tile = rows_per_tile(static_cast<std::int64_t>(k2) * d.iw, d.ih);
  const std::int64_t buf = static_cast<std::int64_t>(k2) * tile * d.iw;
#pragma omp parallel
  {
    std::vector<float> colv(buf);
#pragma omp for schedule(static) collapse(2)
    for (int b = 0; b < d.n; ++b) {
      for (int o = 0; o < d.oc; ++o) {
        const float* xb = x + static_cast<std::int64_t>(b) * d.ic * Lin;
        float* yo = y + (static_cast<std::int64_t>(b) * d.oc + o) * Lout;
        const float v = bias ? bias[o] : 0.0f;
        std::fill(yo, yo + Lout, v);
        for (int iy0 = 0; iy0 < d.ih; iy0 += tile) {
          const int iy1 = std::min(d.ih, iy0 + tile);
          const std::int64_t tl = static_cast<std::int64_t>(iy1 - iy0) * d.iw;
          // colv[kk, tile] = sum_ci w[o,ci,kk] * x[ci, tile]
          for (int kk = 0; kk < k2; ++kk) {
            float* row = colv.data() + static_cast<std::int64_t>(kk) * tl;
            std::fill(row, row + tl, 0.0f);
            for (int ci = 0; ci < d.ic; ++ci) {
              const float a =
                  w[(static_cast<std::int64_t>(o) * d.ic + ci) * k2 + kk];
              const float* xc = xb + ci * Lin + static_cast<std::int64_t>(iy0) * d.iw;
              for (std::int64_t l = 0; l < tl; ++l) row[l] += a * xc[l];
            }
          }
          for (int kh = 0; kh < d.k; ++kh) {
            for (int kw = 0; kw < d.k; ++kw) {
              const float* row = colv.data() +
                                 static_cast<std::int64_t>(kh * d.k + kw) * tl;
              for (int iy = iy0; iy < iy1; ++iy) {
                const int yy = iy * d.s - d.p + kh;
                if (yy < 0 || yy >= d.oh) continue;
                const float* src = row + static_cast<std::int64_t>(iy - iy0) * d.iw;
                float* dst = yo + static_cast<std::int64_t>(yy) * d.ow;
                for (int ix = 0; ix < d.iw; ++ix) {
                  const int yx = ix * d.s - d.p + kw;
                  if (yx >= 0 && yx < d.ow) dst[yx] += src[ix];
                }
              }
            }
          }
        }
      }
    }
  }
}

void deconv2d_bwd_input(const float* dy, Shape4 xs, const float* w,
                        const ConvSpec& spec, float* dx_accum) {
  const ConvDims d = deconv_dims(xs, spec);
  const int k2 = d.k * d.k;
  const std::int64_t Lin = d.in_plane();
  const std::int64_t Lout = d.out_plane();
  const int tile = rows_per_tile(static_cast<std::int64_t>(k2) * d.iw, d.ih);
  std::vector<float> patches(static_cast<std::size_t>(k2) * tile * d.iw);
  for (int b = 0; b < d.n; ++b) {
    const float* dyb = dy + static_cast<std::int64_t>(b) * d.oc * Lout;
    float* dxb = dx_accum + static_cast<std::int64_t>(b) * d.ic * Lin;
    for (int o = 0; o < d.oc; ++o) {
      for (int iy0 = 0; iy0 < d.ih; iy0 += tile) {
        const int iy1 = std::min(d.ih, iy0 + tile);
        const std::int64_t tl = static_cast<std::int64_t>(iy1 - iy0) * d.iw;
        extract_deconv_patches(dyb + o * Lout, d, iy0, iy1, patches.data());
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < d.ic; ++ci) {
          float* dxc = dxb + ci * Lin + static_cast<std::int64_t>(iy0) * d.iw;
          for (int kk = 0; kk < k2; ++kk) {
            const float a =
                w[(static_cast<std::int64_t>(o) * d.ic + ci) * k2 + kk];
            const float* row = patches.data() + static_cast<std::int64_t>(kk) * tl;
            for (std::int64_t l = 0; l < tl; ++l) dxc[l] += a * row[l];
          }
        }
      }
    }
  }
}

void deconv2d_bwd_params(const float* dy, const float* x, Shape4 xs,
                         const ConvSpec& spec, float* dw_accum,
                         float* db_accum) {
  const ConvDims d = deconv_dims(xs, spec);
  const int k2 = d.k * d.k;
  const std::int64_t Lin = d.in_plane();
  const std::int64_t Lout = d.out_plane();
  const int tile = rows_per_tile(static_cast<std::int64_t>(k2) * d.iw, d.ih);
  std::vector<float> patches(static_cast<std::size_t>(k2) * tile * d.iw);
  for (int b = 0; b < d.n; ++b) {
    const float* dyb = dy + static_cast<std::int64_t>(b) * d.oc * Lout;
    const float* xb = x + static_cast<std::int64_t>(b) * d.ic * Lin;
    for (int o = 0; o < d.oc; ++o) {
      for (int iy0 = 0; iy0 < d.ih; iy0 += tile) {
        const int iy1 = std::min(d.ih, iy0 + tile);
        const std::int64_t tl = static_cast<std::int64_t>(iy1 - iy0) * d.iw;
        extract_deconv_patches(dyb + o * Lout, d, iy0, iy1, patches.data());
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < d.ic; ++ci) {
          const float* xc = xb + ci * Lin + static_cast<std::int64_t>(iy0) * d.iw;
          float* dwo = dw_accum + (static_cast<std::int64_t>(o) * d.ic + ci) * k2;
          for (int kk = 0; kk < k2; ++kk) {
            const float* row = patches.data() + static_cast<std::int64_t>(kk) * tl;
            float acc = 0.0f;
            for (std::int64_t l = 0; l < tl; ++l) acc += row[l] * xc[l];
            dwo[kk] += acc;
          }
        }
      }
    }
    if (db_accum) {
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.oc; ++o) {
        const float* dyo = dyb + o * Lout;
        float acc = 0.0f;
        for (std::int64_t l = 0; l < Lout; ++l) acc += dyo[l];
        db_accum[o] += acc;
      }
    }
  }
}

void prelu_fwd(const float* x, const float* slopes, int n, int c, int hw,
               float* y) {
#pragma omp parallel for schedule(static) collapse(2)
  for (int b = 0; b < n; ++b) {
    for (int ci = 0; ci < c; ++ci) {
      const float a = slopes[ci];
      const std::int64_t off = (static_cast<std::int64_t>(b) * c + ci) * hw;
      for (int l = 0; l < hw; ++l) {
        const float v = x[off + l];
        y[off + l] = v > 0.0f ? v : a * v;
      }
    }
  }
}

void prelu_bwd(const float* dy, const float* x, const float* slopes, int n,
               int c, int hw, float* dx_accum, float* dslope_accum) {
  if (dx_accum) {
#pragma omp parallel for schedule(static) collapse(2)
    for (int b = 0; b < n; ++b) {
      for (int ci = 0; ci < c; ++ci) {
        const float a = slopes[ci];
        const std::int64_t off = (static_cast<std::int64_t>(b) * c + ci) * hw;
        for (int l = 0; l < hw; ++l) {
          dx_accum[off + l] += dy[off + l] * (x[off + l] > 0.0f ? 1.0f : a);
        }
      }
    }
  }
  if (dslope_accum) {
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
      float acc = 0.0f;
      for (int b = 0; b < n; ++b) {
        const std::int64_t off = (static_cast<std::int64_t>(b) * c + ci) * hw;
        for (int l = 0; l < hw; ++l) {
          if (x[off + l] <= 0.0f) acc += dy[off + l] * x[off + l];
        }
      }
      dslope_accum[ci] += acc;
    }
  }
}

namespace {

struct AxisView {
  int len;
  std::int64_t stride;
  std::int64_t outer_count;
  int o0, o1, o2;
  int dims[4];
  std::int64_t strides[4];
};

AxisView axis_view(Shape4 s, int axis) {
  if (axis < 0 || axis > 3) {
    throw ShapeError("softmax: axis " + std::to_string(axis) +
                     " out of range [0,3]");
  }
  AxisView v;
  v.dims[0] = s.n;
  v.dims[1] = s.c;
  v.dims[2] = s.h;
  v.dims[3] = s.w;
  v.strides[3] = 1;
  v.strides[2] = s.w;
  v.strides[1] = static_cast<std::int64_t>(s.h) * s.w;
  v.strides[0] = static_cast<std::int64_t>(s.c) * s.h * s.w;
  v.len = v.dims[axis];
  v.stride = v.strides[axis];
  int other[3];
  int no = 0;
  for (int d = 0; d < 4; ++d)
    if (d != axis) other[no++] = d;
  v.o0 = other[0];
  v.o1 = other[1];
  v.o2 = other[2];
  v.outer_count =
      static_cast<std::int64_t>(v.dims[v.o0]) * v.dims[v.o1] * v.dims[v.o2];
  return v;
}

}  // namespace

void softmax_axis_fwd(const float* x, Shape4 s, int axis, float* y) {
  const AxisView v = axis_view(s, axis);
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < v.outer_count; ++idx) {
    const std::int64_t i2 = idx % v.dims[v.o2];
    const std::int64_t i1 = (idx / v.dims[v.o2]) % v.dims[v.o1];
    const std::int64_t i0 =
        idx / (static_cast<std::int64_t>(v.dims[v.o2]) * v.dims[v.o1]);
    const std::int64_t base =
        i0 * v.strides[v.o0] + i1 * v.strides[v.o1] + i2 * v.strides[v.o2];
    float mx = x[base];
    for (int j = 1; j < v.len; ++j) mx = std::max(mx, x[base + j * v.stride]);
    float sum = 0.0f;
    for (int j = 0; j < v.len; ++j) {
      const float e = std::exp(x[base + j * v.stride] - mx);
      y[base + j * v.stride] = e;
      sum += e;
    }
    for (int j = 0; j < v.len; ++j) y[base + j * v.stride] /= sum;
  }
}

void softmax_axis_bwd(const float* dy, const float* y, Shape4 s, int axis,
                      float* dx_accum) {
  const AxisView v = axis_view(s, axis);
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < v.outer_count; ++idx) {
    const std::int64_t i2 = idx % v.dims[v.o2];
    const std::int64_t i1 = (idx / v.dims[v.o2]) % v.dims[v.o1];
    const std::int64_t i0 =
        idx / (static_cast<std::int64_t>(v.dims[v.o2]) * v.dims[v.o1]);
    const std::int64_t base =
        i0 * v.strides[v.o0] + i1 * v.strides[v.o1] + i2 * v.strides[v.o2];
    float dot = 0.0f;
    for (int j = 0; j < v.len; ++j) {
      dot += dy[base + j * v.stride] * y[base + j * v.stride];
    }
    for (int j = 0; j < v.len; ++j) {
      const std::int64_t at = base + j * v.stride;
      dx_accum[at] += y[at] * (dy[at] - dot);
    }
  }
}

void add(const float* a, const float* b, std::int64_t count, float* y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = a[i] + b[i];
}

void sub(const float* a, const float* b, std::int64_t count, float* y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = a[i] - b[i];
}

void mul(const float* a, const float* b, std::int64_t count, float* y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = a[i] * b[i];
}

void axpy(float alpha, const float* x, std::int64_t count, float* y_accum) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y_accum[i] += alpha * x[i];
}

void mul_accum(const float* a, const float* b, std::int64_t count,
               float* y_accum) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y_accum[i] += a[i] * b[i];
}

double mse_loss(const float* a, const float* b, std::int64_t count) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(count);
}

double l1_loss(const float* a, const float* b, std::int64_t count) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return acc / static_cast<double>(count);
}

bool all_finite(const float* x, std::int64_t count) {
  for (std::int64_t i = 0; i < count; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

}  // namespace hbpn::kernels
