#include <fstream>
#include <random>

#include "doctest.h"
#include "hbpn/metrics.hpp"
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

TEST_CASE("psnr of identical images hits the 100 dB cap") {
  const ImageRGB a = random_image(24, 24, 1);
  CHECK(psnr_y(a, a, 2) == 100.0);
}

TEST_CASE("a uniform unit Y difference gives 20 log10(255)") {
  ImageRGB a(20, 20, 0.25f);
  ImageRGB b(20, 20, 0.25f + 1.0f / 219.0f);  // Y moves by 219 * delta = 1
  const double psnr = psnr_y(a, b, 2);
  CHECK(psnr == doctest::Approx(20.0 * std::log10(255.0)).epsilon(2e-4));
  CHECK(psnr == doctest::Approx(48.13).epsilon(1e-3));
}

TEST_CASE("psnr is symmetric") {
  const ImageRGB a = random_image(30, 22, 3);
  const ImageRGB b = random_image(30, 22, 4);
  CHECK(psnr_y(a, b, 4) == psnr_y(b, a, 4));
}

TEST_CASE("the crop removes exactly s border pixels") {
  ImageRGB a = random_image(28, 28, 5);
  ImageRGB b = a;
  const int s = 3;
  // poison exactly the s-pixel border
  for (int y = 0; y < 28; ++y) {
    for (int x = 0; x < 28; ++x) {
      if (y >= s && y < 28 - s && x >= s && x < 28 - s) continue;
      for (int c = 0; c < 3; ++c) b.at(c, y, x) = 1.0f - b.at(c, y, x);
    }
  }
  CHECK(psnr_y(a, b, s) == 100.0);       // border fully excluded
  CHECK(psnr_y(a, b, s - 1) < 100.0);    // one ring of damage remains
  CHECK(ssim_y(a, b, s) == 1.0);
  CHECK_THROWS_AS(psnr_y(a, b, 14), ImageError);
}

TEST_CASE("psnr size mismatch is rejected") {
  CHECK_THROWS_AS(psnr_y(random_image(8, 8, 1), random_image(8, 9, 1), 0),
                  ImageError);
}

TEST_CASE("ssim of identical images is exactly one") {
  const ImageRGB a = random_image(32, 26, 6);
  CHECK(ssim_y(a, a, 2) == 1.0);
}

TEST_CASE("ssim of shifted constants matches the luminance closed form") {
  // constant Y planes differ by 10 on the 8-bit scale
  const float g1 = 0.4f;
  const float g2 = g1 + 10.0f / 219.0f;
  ImageRGB a(24, 24, g1);
  ImageRGB b(24, 24, g2);
  const double c1 = 16.0 + 219.0 * g1;
  const double c2 = 16.0 + 219.0 * g2;
  const double C1 = (0.01 * 255) * (0.01 * 255);
  const double expected = (2.0 * c1 * c2 + C1) / (c1 * c1 + c2 * c2 + C1);
  CHECK(ssim_y(a, b, 0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("ssim is symmetric and rejects tiny images") {
  const ImageRGB a = random_image(20, 20, 7);
  const ImageRGB b = random_image(20, 20, 8);
  CHECK(ssim_y(a, b, 2) == ssim_y(b, a, 2));
  CHECK_THROWS_AS(ssim_y(random_image(8, 8, 9), random_image(8, 8, 9), 0),
                  ImageError);
}

TEST_CASE("self-ensemble of the identity runner returns the input exactly") {
  const ImageRGB img = random_image(16, 16, 10);
  const ImageRGB out =
      self_ensemble_infer([](const ImageRGB& x) { return x; }, img);
  CHECK(out.planes == img.planes);
}

TEST_CASE("self-ensemble with a model keeps shapes and the group symmetry") {
  auto model = HBPNModel::build(ModelConfig{1, 1, 4, HeadKind::WR, 2}, 11);
  const ImageRGB img = random_image(16, 16, 12);

  const ImageRGB single = model_infer(model, img);
  const ImageRGB ens = self_ensemble_infer(model, img);
  CHECK(ens.height == img.height);
  CHECK(ens.width == img.width);
  CHECK(single.planes != ens.planes);  // averaging changes a real model

  // pre-transforming by any group element and undoing it afterwards leaves
  // the ensemble unchanged up to summation order
  for (const int g : {1, 3, 5}) {
    const ImageRGB moved =
        invert_dihedral(self_ensemble_infer(model, apply_dihedral(img, g)), g);
    REQUIRE(moved.planes.size() == ens.planes.size());
    for (std::size_t i = 0; i < ens.planes.size(); ++i) {
      CHECK(moved.planes[i] == doctest::Approx(ens.planes[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("report rendering writes a table and one record per image") {
  const auto dir = testutil::scratch_dir("report");
  MetricsReport report;
  report.scale = 4;
  report.crop = 4;
  report.images = {{"alpha", 28.42, 0.810}, {"beta", 30.00, 0.900}};
  write_report(report, dir / "report.txt", dir / "records.jsonl");
  std::ifstream records(dir / "records.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(records, line)) ++lines;
  CHECK(lines == 2);
  std::ifstream table(dir / "report.txt");
  std::string all((std::istreambuf_iterator<char>(table)),
                  std::istreambuf_iterator<char>());
  CHECK(all.find("alpha") != std::string::npos);
  CHECK(all.find("mean") != std::string::npos);
  CHECK(report.mean_psnr() == doctest::Approx(29.21));
}
