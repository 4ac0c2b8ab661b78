#include <omp.h>

#include <random>

#include "doctest.h"
#include "hbpn/kernels.hpp"
#include "hbpn/reference.hpp"
#include "support/testutil.hpp"

using namespace hbpn;

namespace {

struct Case {
  Shape4 xs;
  ConvSpec spec;
};

const Case kConvCases[] = {
    {{2, 3, 9, 7}, {3, 5, 3, 1, 1}},
    {{1, 4, 16, 16}, {4, 8, 6, 2, 2}},
    {{2, 2, 8, 8}, {2, 6, 1, 1, 0}},   // pointwise fast path
    {{1, 3, 11, 13}, {3, 4, 5, 2, 1}},
    {{1, 1, 34, 34}, {1, 2, 6, 2, 2}},
};

const Case kDeconvCases[] = {
    {{2, 5, 4, 6}, {5, 3, 3, 1, 1}},
    {{1, 8, 8, 8}, {8, 4, 6, 2, 2}},
    {{1, 2, 5, 7}, {2, 3, 4, 3, 1}},
    {{2, 3, 12, 9}, {3, 2, 6, 2, 2}},
};

std::vector<float> random_vec(std::size_t n, std::mt19937& rng) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel conv kernels match the serial reference") {
  std::mt19937 rng(11);
  for (const auto& c : kConvCases) {
    const auto x = random_vec(c.xs.numel(), rng);
    const auto w = random_vec(c.spec.weight_count(), rng);
    const auto b = random_vec(c.spec.out_channels, rng);
    const int oh = conv_out_extent(c.xs.h, c.spec, "h");
    const int ow = conv_out_extent(c.xs.w, c.spec, "w");
    const std::size_t ylen = static_cast<std::size_t>(c.xs.n) *
                             c.spec.out_channels * oh * ow;

    std::vector<float> y_par(ylen), y_ref(ylen);
    kernels::conv2d_fwd(x.data(), c.xs, w.data(), b.data(), c.spec,
                        y_par.data());
    reference::conv2d_fwd(x.data(), c.xs.n, c.xs.c, c.xs.h, c.xs.w, w.data(),
                          b.data(), c.spec.out_channels, c.spec.kernel,
                          c.spec.stride, c.spec.padding, y_ref.data());
    CHECK(testutil::max_rel_diff(y_par, y_ref) < 1e-5);

    // backward passes accumulate; seed both sides with the same prefill
    const auto dy = random_vec(ylen, rng);
    auto dx_par = random_vec(x.size(), rng);
    auto dx_ref = dx_par;
    kernels::conv2d_bwd_input(dy.data(), c.xs, w.data(), c.spec,
                              dx_par.data());
    reference::conv2d_bwd_input(dy.data(), c.xs.n, c.xs.c, c.xs.h, c.xs.w,
                                w.data(), c.spec.out_channels, c.spec.kernel,
                                c.spec.stride, c.spec.padding, dx_ref.data());
    CHECK(testutil::max_rel_diff(dx_par, dx_ref) < 1e-5);

    auto dw_par = random_vec(w.size(), rng);
    auto dw_ref = dw_par;
    auto db_par = random_vec(b.size(), rng);
    auto db_ref = db_par;
    kernels::conv2d_bwd_params(dy.data(), x.data(), c.xs, c.spec,
                               dw_par.data(), db_par.data());
    reference::conv2d_bwd_params(dy.data(), x.data(), c.xs.n, c.xs.c, c.xs.h,
                                 c.xs.w, c.spec.out_channels, c.spec.kernel,
                                 c.spec.stride, c.spec.padding, dw_ref.data(),
                                 db_ref.data());
    CHECK(testutil::max_rel_diff(dw_par, dw_ref) < 1e-5);
    CHECK(testutil::max_rel_diff(db_par, db_ref) < 1e-5);
  }
}

TEST_CASE("parallel transposed-conv kernels match the serial reference") {
  std::mt19937 rng(13);
  for (const auto& c : kDeconvCases) {
    const auto x = random_vec(c.xs.numel(), rng);
    const auto w = random_vec(c.spec.weight_count(), rng);
    const auto b = random_vec(c.spec.out_channels, rng);
    const int oh = deconv_out_extent(c.xs.h, c.spec, "h");
    const int ow = deconv_out_extent(c.xs.w, c.spec, "w");
    const std::size_t ylen = static_cast<std::size_t>(c.xs.n) *
                             c.spec.out_channels * oh * ow;

    std::vector<float> y_par(ylen), y_ref(ylen);
    kernels::deconv2d_fwd(x.data(), c.xs, w.data(), b.data(), c.spec,
                          y_par.data());
    reference::deconv2d_fwd(x.data(), c.xs.n, c.xs.c, c.xs.h, c.xs.w, w.data(),
                            b.data(), c.spec.out_channels, c.spec.kernel,
                            c.spec.stride, c.spec.padding, y_ref.data());
    CHECK(testutil::max_rel_diff(y_par, y_ref) < 1e-5);

    const auto dy = random_vec(ylen, rng);
    auto dx_par = random_vec(x.size(), rng);
    auto dx_ref = dx_par;
    kernels::deconv2d_bwd_input(dy.data(), c.xs, w.data(), c.spec,
                                dx_par.data());
    reference::deconv2d_bwd_input(dy.data(), c.xs.n, c.xs.c, c.xs.h, c.xs.w,
                                  w.data(), c.spec.out_channels, c.spec.kernel,
                                  c.spec.stride, c.spec.padding,
                                  dx_ref.data());
    CHECK(testutil::max_rel_diff(dx_par, dx_ref) < 1e-5);

    auto dw_par = random_vec(w.size(), rng);
    auto dw_ref = dw_par;
    auto db_par = random_vec(b.size(), rng);
    auto db_ref = db_par;
    kernels::deconv2d_bwd_params(dy.data(), x.data(), c.xs, c.spec,
                                 dw_par.data(), db_par.data());
    reference::deconv2d_bwd_params(dy.data(), x.data(), c.xs.n, c.xs.c,
                                   c.xs.h, c.xs.w, c.spec.out_channels,
                                   c.spec.kernel, c.spec.stride,
                                   c.spec.padding, dw_ref.data(),
                                   db_ref.data());
    CHECK(testutil::max_rel_diff(dw_par, dw_ref) < 1e-5);
    CHECK(testutil::max_rel_diff(db_par, db_ref) < 1e-5);
  }
}

TEST_CASE("kernel results are bit-identical for any thread count") {
  std::mt19937 rng(17);
  const Case c{{2, 4, 12, 10}, {4, 6, 6, 2, 2}};
  const auto x = random_vec(c.xs.numel(), rng);
  const auto w = random_vec(c.spec.weight_count(), rng);
  const auto b = random_vec(c.spec.out_channels, rng);
  const int oh = conv_out_extent(c.xs.h, c.spec, "h");
  const int ow = conv_out_extent(c.xs.w, c.spec, "w");
  const std::size_t ylen =
      static_cast<std::size_t>(c.xs.n) * c.spec.out_channels * oh * ow;
  const auto dy = random_vec(ylen, rng);

  const int saved = omp_get_max_threads();
  std::vector<float> y1(ylen), y2(ylen);
  std::vector<float> dw1(w.size(), 0.0f), dw2(w.size(), 0.0f);
  std::vector<float> db1(b.size(), 0.0f), db2(b.size(), 0.0f);
  omp_set_num_threads(1);
  kernels::conv2d_fwd(x.data(), c.xs, w.data(), b.data(), c.spec, y1.data());
  kernels::conv2d_bwd_params(dy.data(), x.data(), c.xs, c.spec, dw1.data(),
                             db1.data());
  omp_set_num_threads(2);
  kernels::conv2d_fwd(x.data(), c.xs, w.data(), b.data(), c.spec, y2.data());
  kernels::conv2d_bwd_params(dy.data(), x.data(), c.xs, c.spec, dw2.data(),
                             db2.data());
  omp_set_num_threads(saved);
  CHECK(y1 == y2);
  CHECK(dw1 == dw2);
  CHECK(db1 == db2);
}

TEST_CASE("single-channel 1x1 kernel with unit weight is the identity") {
  std::mt19937 rng(19);
  const Shape4 xs{1, 1, 6, 6};
  const auto x = random_vec(xs.numel(), rng);
  const float w = 1.0f, b = 0.0f;
  std::vector<float> y(xs.numel());
  const ConvSpec spec{1, 1, 1, 1, 0};
  kernels::conv2d_fwd(x.data(), xs, &w, &b, spec, y.data());
  CHECK(y == x);
  kernels::deconv2d_fwd(x.data(), xs, &w, &b, spec, y.data());
  CHECK(y == x);
}

TEST_CASE("conv and transposed conv are adjoint") {
  // <y, conv2d(x)> == <conv_transpose2d(y), x> with axis-swapped weights
  std::mt19937 rng(23);
  const Case cases[] = {
      {{1, 1, 4, 4}, {1, 1, 3, 1, 1}},
      {{2, 4, 8, 8}, {4, 2, 6, 2, 2}},
      {{1, 3, 7, 5}, {3, 2, 3, 2, 1}},
  };
  for (const auto& c : cases) {
    const auto x = random_vec(c.xs.numel(), rng);
    const auto w = random_vec(c.spec.weight_count(), rng);
    const int oh = conv_out_extent(c.xs.h, c.spec, "h");
    const int ow = conv_out_extent(c.xs.w, c.spec, "w");
    const Shape4 ys{c.xs.n, c.spec.out_channels, oh, ow};
    const auto y = random_vec(ys.numel(), rng);

    std::vector<float> cx(ys.numel());
    kernels::conv2d_fwd(x.data(), c.xs, w.data(), nullptr, c.spec, cx.data());

    // swap the first two weight axes for the transposed op's convention
    const int k2 = c.spec.kernel * c.spec.kernel;
    std::vector<float> wt(w.size());
    for (int o = 0; o < c.spec.out_channels; ++o) {
      for (int i = 0; i < c.spec.in_channels; ++i) {
        for (int kk = 0; kk < k2; ++kk) {
          wt[(static_cast<std::size_t>(i) * c.spec.out_channels + o) * k2 + kk] =
              w[(static_cast<std::size_t>(o) * c.spec.in_channels + i) * k2 + kk];
        }
      }
    }
    ConvSpec tspec{c.spec.out_channels, c.spec.in_channels, c.spec.kernel,
                   c.spec.stride, c.spec.padding};
    std::vector<float> ty(c.xs.numel());
    kernels::deconv2d_fwd(y.data(), ys, wt.data(), nullptr, tspec, ty.data());

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < cx.size(); ++i) lhs += double(y[i]) * cx[i];
    for (std::size_t i = 0; i < ty.size(); ++i) rhs += double(ty[i]) * x[i];
    CHECK(std::fabs(lhs - rhs) / std::max({std::fabs(lhs), std::fabs(rhs), 1.0}) <
          1e-4);
  }
}

TEST_CASE("softmax values and stability") {
  // equal inputs split evenly
  std::vector<float> x{0.0f, 0.0f, 0.0f};
  std::vector<float> y(3);
  kernels::softmax_axis_fwd(x.data(), Shape4{1, 3, 1, 1}, 1, y.data());
  for (const float v : y) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  // huge gap saturates without overflow
  std::vector<float> big{1000.0f, 0.0f};
  std::vector<float> yb(2);
  kernels::softmax_axis_fwd(big.data(), Shape4{1, 2, 1, 1}, 1, yb.data());
  CHECK(yb[0] == 1.0f);
  CHECK(yb[1] == 0.0f);

  // random rows sum to one along every axis choice
  std::mt19937 rng(29);
  const Shape4 s{2, 3, 4, 5};
  const auto xr = random_vec(s.numel(), rng);
  for (int axis = 0; axis < 4; ++axis) {
    std::vector<float> yr(s.numel());
    kernels::softmax_axis_fwd(xr.data(), s, axis, yr.data());
    const int dims[4] = {s.n, s.c, s.h, s.w};
    const std::int64_t strides[4] = {static_cast<std::int64_t>(s.c) * s.h * s.w,
                                     static_cast<std::int64_t>(s.h) * s.w, s.w,
                                     1};
    std::int64_t checked = 0;
    for (std::int64_t base = 0; base < s.numel(); ++base) {
      if ((base / strides[axis]) % dims[axis] != 0) continue;
      double sum = 0;
      for (int j = 0; j < dims[axis]; ++j) sum += yr[base + j * strides[axis]];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      ++checked;
    }
    CHECK(checked == s.numel() / dims[axis]);
  }
}

TEST_CASE("softmax is shift invariant along the axis") {
  std::mt19937 rng(31);
  const Shape4 s{1, 4, 2, 2};
  auto x = random_vec(s.numel(), rng);
  std::vector<float> y1(s.numel()), y2(s.numel());
  kernels::softmax_axis_fwd(x.data(), s, 1, y1.data());
  for (auto& v : x) v += 3.25f;
  kernels::softmax_axis_fwd(x.data(), s, 1, y2.data());
  CHECK(testutil::max_rel_diff(y1, y2) < 1e-5);
}

TEST_CASE("prelu point values") {
  const float slopes = 0.25f;
  std::vector<float> x{3.0f, -2.0f};
  std::vector<float> y(2);
  kernels::prelu_fwd(x.data(), &slopes, 1, 1, 2, y.data());
  CHECK(y[0] == 3.0f);
  CHECK(y[1] == -0.5f);
}

TEST_CASE("loss kernels") {
  std::vector<float> a{0.0f}, b{2.0f};
  CHECK(kernels::mse_loss(a.data(), a.data(), 1) == 0.0);
  CHECK(kernels::mse_loss(a.data(), b.data(), 1) == doctest::Approx(4.0));
  CHECK(kernels::l1_loss(a.data(), b.data(), 1) == doctest::Approx(2.0));
}

TEST_CASE("shape mismatch diagnostics name the offending dimension") {
  std::vector<float> x(2 * 3 * 4 * 4), w(10), y(100);
  const ConvSpec spec{5, 2, 3, 1, 1};  // expects 5 input channels
  CHECK_THROWS_WITH_AS(
      kernels::conv2d_fwd(x.data(), Shape4{2, 3, 4, 4}, w.data(), nullptr,
                          spec, y.data()),
      doctest::Contains("c=3"), ShapeError);
}
