// Exercises the hbpn binary end to end. Takes the binary path as argv[1].

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "hbpn/image.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

#define CLI_CHECK(cond)                                              \
  do {                                                               \
    if (!(cond)) {                                                   \
      std::fprintf(stderr, "FAILED %s:%d: %s\n", __FILE__, __LINE__, \
                   #cond);                                           \
      ++g_failures;                                                  \
    }                                                                \
  } while (0)

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

hbpn::ImageRGB textured_image(int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(0.05f, 0.95f);
  hbpn::ImageRGB small((h + 3) / 4, (w + 3) / 4);
  for (auto& v : small.planes) v = d(rng);
  return hbpn::bicubic_resize(small, h, w);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-hbpn>\n");
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path root =
      fs::temp_directory_path() / ("hbpn_cli_" + std::to_string(::getpid()));
  fs::create_directories(root / "HR");
  for (int i = 0; i < 2; ++i) {
    hbpn::save_image(textured_image(40, 40, 500 + i),
                     root / "HR" / ("img" + std::to_string(i) + ".png"));
  }

  // help works, unknown flags are hard errors
  CLI_CHECK(run(bin + " --help") == 0);
  CLI_CHECK(run(bin + " train --help") == 0);
  CLI_CHECK(run(bin + " --no-such-flag") != 0);
  CLI_CHECK(run(bin + " eval --data x --scale 2 --frobnicate") != 0);
  CLI_CHECK(run(bin) != 0);  // a subcommand is required

  // prepare-data
  const std::string prep = bin + " prepare-data --hr " +
                           (root / "HR").string() + " --out " + root.string() +
                           " --scales 2";
  CLI_CHECK(run(prep) == 0);
  CLI_CHECK(fs::exists(root / "LRx2" / "img0.png"));
  CLI_CHECK(fs::exists(root / "LRx2_up" / "img1.png"));
  // empty input dir is a data error
  fs::create_directories(root / "empty");
  CLI_CHECK(run(bin + " prepare-data --hr " + (root / "empty").string() +
                " --out " + root.string()) == 2);

  // train with overrides
  const std::string common =
      " --set scale=2 --set modules=1 --set depth=1 --set base_channels=4"
      " --set patch_size=16 --set batch_schedule=1x3 --set learning_rate=0.001"
      " --set dataset_root=" + root.string();
  CLI_CHECK(run(bin + " --seed 3 train" + common +
                " --set out_dir=" + (root / "run1").string()) == 0);
  CLI_CHECK(fs::exists(root / "run1" / "model_final.ckpt"));
  CLI_CHECK(fs::exists(root / "run1" / "loss_log.csv"));

  // the same seed reproduces the loss log bit for bit
  CLI_CHECK(run(bin + " --seed 3 train" + common +
                " --set out_dir=" + (root / "run2").string()) == 0);
  CLI_CHECK(slurp(root / "run1" / "loss_log.csv") ==
            slurp(root / "run2" / "loss_log.csv"));

  // unknown config keys are rejected as usage errors
  CLI_CHECK(run(bin + " train" + common + " --set nonsense=1") == 1);

  // eval: bicubic pass-through and model checkpoints
  CLI_CHECK(run(bin + " eval --data " + root.string() +
                " --scale 2 --bicubic --out " + (root / "evalb").string()) == 0);
  CLI_CHECK(fs::exists(root / "evalb" / "report.txt"));
  CLI_CHECK(run(bin + " eval --data " + root.string() + " --scale 2" +
                " --checkpoint " + (root / "run1/model_final.ckpt").string() +
                " --bicubic") == 1);
  CLI_CHECK(run(bin + " eval --data " + root.string() + " --scale 2") == 1);
  CLI_CHECK(run(bin + " eval --data /nope --scale 2 --bicubic") == 2);
  // scale mismatch with the checkpoint is a data error
  CLI_CHECK(run(bin + " eval --data " + root.string() + " --scale 4" +
                " --checkpoint " + (root / "run1/model_final.ckpt").string()) ==
            2);

  // infer: dims, determinism, metrics printout path
  const std::string infer_base =
      bin + " infer --checkpoint " + (root / "run1/model_final.ckpt").string() +
      " --input " + (root / "LRx2" / "img0.png").string() + " --scale 2";
  CLI_CHECK(run(infer_base + " --out " + (root / "sr_a.png").string()) == 0);
  CLI_CHECK(run(infer_base + " --out " + (root / "sr_b.png").string() +
                " --gt " + (root / "HR" / "img0.png").string()) == 0);
  const hbpn::ImageRGB lr = hbpn::load_image(root / "LRx2" / "img0.png");
  const hbpn::ImageRGB sr = hbpn::load_image(root / "sr_a.png");
  CLI_CHECK(sr.height == lr.height * 2);
  CLI_CHECK(sr.width == lr.width * 2);
  CLI_CHECK(slurp(root / "sr_a.png") == slurp(root / "sr_b.png"));

  // diagnose artifact set
  CLI_CHECK(run(bin + " diagnose --checkpoint " +
                (root / "run1/model_final.ckpt").string() + " --input " +
                (root / "LRx2_up" / "img0.png").string() + " --out " +
                (root / "diag").string()) == 0);
  CLI_CHECK(fs::exists(root / "diag" / "coarse_0.png"));
  CLI_CHECK(fs::exists(root / "diag" / "wmap_0.png"));
  CLI_CHECK(fs::exists(root / "diag" / "prob_0.png"));
  CLI_CHECK(fs::exists(root / "diag" / "activations.txt"));

  // ablate head comparison
  CLI_CHECK(run(bin + " ablate --axis head --values wr,plain" + common +
                " --set out_dir=" + (root / "abl").string()) == 0);
  CLI_CHECK(fs::exists(root / "abl" / "ablation.txt"));
  const std::string table = slurp(root / "abl" / "ablation.txt");
  CLI_CHECK(table.find("WR model") != std::string::npos);
  CLI_CHECK(table.find("Plain model") != std::string::npos);

  // numeric failures exit with code 3
  CLI_CHECK(run(bin + " train" + common +
                " --set learning_rate=1e30 --set batch_schedule=1x40" +
                " --set out_dir=" + (root / "boom").string()) == 3);

  if (g_failures == 0) {
    std::printf("test_cli: all checks passed\n");
    return 0;
  }
  std::printf("test_cli: %d failures\n", g_failures);
  return 1;
}
