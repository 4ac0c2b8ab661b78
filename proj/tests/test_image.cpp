#include <fstream>
#include <random>

#include "doctest.h"
#include "hbpn/image.hpp"
#include "support/testutil.hpp"

using namespace hbpn;

namespace {

ImageRGB random_image(int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  ImageRGB img(h, w);
  for (auto& v : img.planes) v = d(rng) / 255.0f;
  return img;
}

}  // namespace

TEST_CASE("cubic kernel interpolates exactly at integer offsets") {
  using resample_detail::cubic_kernel;
  CHECK(cubic_kernel(0.0f) == 1.0f);
  CHECK(cubic_kernel(1.0f) == 0.0f);
  CHECK(cubic_kernel(-1.0f) == 0.0f);
  CHECK(cubic_kernel(2.0f) == 0.0f);
  CHECK(cubic_kernel(-2.0f) == 0.0f);
  CHECK(cubic_kernel(2.5f) == 0.0f);
}

TEST_CASE("resampling weights sum to one per output pixel") {
  for (const auto& [in, out] : {std::pair{100, 50}, {50, 100}, {37, 100},
                                {100, 37}, {7, 8}}) {
    for (const bool antialias : {true, false}) {
      const auto taps = resample_detail::build_taps(in, out, antialias);
      REQUIRE(static_cast<int>(taps.size()) == out);
      for (const auto& pt : taps) {
        double sum = 0.0;
        for (const float w : pt.weights) sum += w;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        for (const int i : pt.indices) {
          CHECK(i >= 0);
          CHECK(i < in);
        }
      }
    }
  }
}

TEST_CASE("antialiasing widens the kernel support on downscale") {
  const auto shrink = resample_detail::build_taps(64, 32, true);
  const auto shrink_noaa = resample_detail::build_taps(64, 32, false);
  const auto grow = resample_detail::build_taps(32, 64, true);
  // halving widens the 4-wide kernel to 8 source taps
  CHECK(shrink[16].indices.size() == 10);     // ceil(8) + 2
  CHECK(shrink_noaa[16].indices.size() == 6); // ceil(4) + 2
  CHECK(grow[16].indices.size() == 6);
  // and the widened kernel actually spreads weight beyond 4 neighbors
  int nonzero = 0;
  for (const float w : shrink[16].weights) nonzero += std::fabs(w) > 1e-6f;
  CHECK(nonzero > 6);
}

TEST_CASE("a constant image stays constant under any resize") {
  ImageRGB img(17, 23, 0.42f);
  for (const auto& [oh, ow] : {std::pair{9, 12}, {34, 46}, {17, 23}, {5, 40}}) {
    const ImageRGB out = bicubic_resize(img, oh, ow);
    CHECK(out.height == oh);
    CHECK(out.width == ow);
    for (const float v : out.planes) {
      CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));
    }
  }
}

TEST_CASE("resize matches an independent bicubic implementation") {
  // 4x4 plane, expected values from a separately written resampler
  const float src[16] = {0.00f, 0.10f, 0.20f, 0.30f, 0.40f, 0.50f, 0.60f,
                         0.70f, 0.80f, 0.90f, 1.00f, 0.05f, 0.15f, 0.25f,
                         0.35f, 0.45f};
  ImageRGB img(4, 4);
  for (int c = 0; c < 3; ++c) {
    std::copy_n(src, 16, img.plane(c));
  }
  const ImageRGB down = bicubic_resize_raw(img, 2, 2);
  const double down_expected[4] = {0.28468628, 0.42918091, 0.50711060,
                                   0.46652222};
  for (int i = 0; i < 4; ++i) {
    CHECK(down.planes[i] == doctest::Approx(down_expected[i]).epsilon(1e-5));
  }
  const ImageRGB up = bicubic_resize_raw(img, 8, 8);
  const double row0[8] = {-0.04687500, -0.01953125, 0.03515625, 0.08750000,
                          0.13750000,  0.18984375,  0.24453125, 0.27187500};
  const double row5[8] = {0.68671875, 0.71406250, 0.76875000, 0.84243469,
                          0.93511658, 0.73848267, 0.25253296, 0.00955811};
  for (int i = 0; i < 8; ++i) {
    CHECK(up.at(0, 0, i) == doctest::Approx(row0[i]).epsilon(1e-5));
    CHECK(up.at(0, 5, i) == doctest::Approx(row5[i]).epsilon(1e-5));
  }
  // the public entry clamps the overshoot
  const ImageRGB clamped = bicubic_resize(img, 8, 8);
  CHECK(clamped.at(0, 0, 0) == 0.0f);
}

TEST_CASE("luma conversion anchors and affinity") {
  ImageRGB black(2, 2, 0.0f);
  ImageRGB white(2, 2, 1.0f);
  ImageRGB gray(2, 2, 0.5f);
  CHECK(rgb_to_y(black)[0] == doctest::Approx(16.0).epsilon(1e-6));
  CHECK(rgb_to_y(white)[0] == doctest::Approx(235.0).epsilon(1e-6));
  CHECK(rgb_to_y(gray)[0] == doctest::Approx(125.5).epsilon(1e-6));

  // affine in RGB
  const ImageRGB p = random_image(3, 3, 1);
  const ImageRGB q = random_image(3, 3, 2);
  const float alpha = 0.3f;
  ImageRGB mix(3, 3);
  for (std::size_t i = 0; i < mix.planes.size(); ++i) {
    mix.planes[i] = alpha * p.planes[i] + (1 - alpha) * q.planes[i];
  }
  const auto ym = rgb_to_y(mix);
  const auto yp = rgb_to_y(p);
  const auto yq = rgb_to_y(q);
  for (std::size_t i = 0; i < ym.size(); ++i) {
    CHECK(ym[i] ==
          doctest::Approx(alpha * yp[i] + (1 - alpha) * yq[i]).epsilon(1e-5));
  }
}

TEST_CASE("dihedral transform group") {
  const ImageRGB img = random_image(2, 3, 7);  // asymmetric
  const auto all = augment_x8(img);
  REQUIRE(all.size() == 8);

  // index 0 is the identity
  CHECK(all[0].planes == img.planes);

  // inverse(transform(img)) is the identity, bit-exactly
  for (int k = 0; k < 8; ++k) {
    const ImageRGB back = inverse_augment(k, all[k]);
    CHECK(back.height == img.height);
    CHECK(back.width == img.width);
    CHECK(back.planes == img.planes);
  }

  // all eight variants are pairwise distinct on an asymmetric image
  for (int a = 0; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) {
      const bool same_shape = all[a].height == all[b].height &&
                              all[a].width == all[b].width;
      CHECK((!same_shape || all[a].planes != all[b].planes));
    }
  }

  // every element has order dividing 4
  for (int k = 0; k < 8; ++k) {
    ImageRGB cur = img;
    for (int r = 0; r < 4; ++r) cur = apply_dihedral(cur, k);
    CHECK(cur.planes == img.planes);
  }

  CHECK_THROWS_AS(apply_dihedral(img, 8), ImageError);
  CHECK_THROWS_AS(inverse_augment(-1, img), ImageError);
}

TEST_CASE("patch extraction tiles and degrades deterministically") {
  const ImageRGB hr = random_image(256, 256, 11);
  const auto pairs = extract_patches(hr, 2, 64, 64, 99);
  CHECK(pairs.size() == 16);
  for (const auto& p : pairs) {
    CHECK(p.input.height == 64);
    CHECK(p.input.width == 64);
    CHECK(p.target.height == 64);
    CHECK(p.target.width == 64);
    CHECK(p.scale == 2);
  }
  const auto again = extract_patches(hr, 2, 64, 64, 99);
  REQUIRE(again.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].input.planes == again[i].input.planes);
    CHECK(pairs[i].target.planes == again[i].target.planes);
  }

  // too-small images are skipped, invalid sizes are rejected
  CHECK(extract_patches(random_image(32, 32, 1), 2, 64, 64, 1).empty());
  CHECK_THROWS_AS(extract_patches(hr, 2, 60, 64, 1), ImageError);
  CHECK_THROWS_AS(extract_patches(hr, 3, 32, 4, 0), ImageError);
}

TEST_CASE("padding to a multiple mirrors and crops back exactly") {
  const ImageRGB img = random_image(33, 47, 13);
  const PaddedImage padded = pad_to_multiple(img, 8);
  CHECK(padded.image.height == 40);
  CHECK(padded.image.width == 48);
  CHECK(padded.orig_h == 33);
  CHECK(padded.orig_w == 47);
  const ImageRGB back = crop(padded.image, 33, 47);
  CHECK(back.planes == img.planes);

  const ImageRGB even = random_image(16, 24, 14);
  const PaddedImage same = pad_to_multiple(even, 8);
  CHECK(same.image.planes == even.planes);

  // the mirrored band reflects the bottom row
  CHECK(padded.image.at(0, 33, 5) == img.at(0, 32, 5));
}

TEST_CASE("modcrop trims to the scale multiple") {
  const ImageRGB img = random_image(37, 41, 15);
  const ImageRGB m4 = modcrop(img, 4);
  CHECK(m4.height == 36);
  CHECK(m4.width == 40);
  CHECK(m4.at(1, 5, 7) == img.at(1, 5, 7));
}

TEST_CASE("png round trip is bit exact for 8-bit data") {
  const auto dir = testutil::scratch_dir("png");
  ImageRGB img(5, 9);
  std::mt19937 rng(17);
  for (auto& v : img.planes) v = static_cast<int>(rng() % 256) / 255.0f;
  save_image(img, dir / "roundtrip.png");
  const ImageRGB back = load_image(dir / "roundtrip.png");
  CHECK(back.height == img.height);
  CHECK(back.width == img.width);
  CHECK(back.planes == img.planes);
}

TEST_CASE("ppm and pgm round trips") {
  const auto dir = testutil::scratch_dir("pnm");
  ImageRGB img(4, 6);
  std::mt19937 rng(19);
  for (auto& v : img.planes) v = static_cast<int>(rng() % 256) / 255.0f;
  save_image(img, dir / "roundtrip.ppm");
  const ImageRGB back = load_image(dir / "roundtrip.ppm");
  CHECK(back.planes == img.planes);

  std::vector<float> plane(12);
  for (auto& v : plane) v = static_cast<int>(rng() % 256) / 255.0f;
  save_gray(plane, 3, 4, dir / "gray.pgm");
  const ImageRGB gray = load_image(dir / "gray.pgm");
  for (int i = 0; i < 12; ++i) {
    CHECK(gray.planes[i] == plane[i]);            // R plane
    CHECK(gray.planes[12 + i] == plane[i]);       // replicated to G
  }
}

TEST_CASE("quantization rounds half away from zero") {
  CHECK(quantize_byte(0.5f) == 128);  // 127.5 rounds up
  CHECK(quantize_byte(0.0f) == 0);
  CHECK(quantize_byte(1.0f) == 255);
  CHECK(quantize_byte(-0.3f) == 0);
  CHECK(quantize_byte(2.0f) == 255);
}

TEST_CASE("unreadable files are rejected with the path named") {
  const auto dir = testutil::scratch_dir("badfiles");
  {
    std::ofstream f(dir / "corrupt.png", std::ios::binary);
    f << "not a png at all";
  }
  CHECK_THROWS_WITH_AS(load_image(dir / "corrupt.png"),
                       doctest::Contains("corrupt.png"), ImageError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), ImageError);
  {
    std::ofstream f(dir / "bad.ppm", std::ios::binary);
    f << "P6\n4 4\n65535\n";
  }
  CHECK_THROWS_WITH_AS(load_image(dir / "bad.ppm"),
                       doctest::Contains("maxval"), ImageError);
}
