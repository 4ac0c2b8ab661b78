#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hbpn/kernels.hpp"
#include "hbpn/train.hpp"

namespace fs = std::filesystem;
using namespace hbpn;

namespace {

// exit codes: 0 ok, 1 usage, 2 data, 3 numeric failure
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::vector<int> parse_scales(const std::string& text) {
  std::vector<int> scales;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) scales.push_back(std::stoi(item));
  }
  if (scales.empty()) throw ConfigError("no scales given");
  return scales;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

TrainConfig resolve_config(const std::string& config_path,
                           const std::vector<std::string>& overrides,
                           std::uint64_t seed, bool seed_given) {
  TrainConfig cfg =
      config_path.empty() ? TrainConfig{} : load_config(config_path);
  for (const auto& kv : overrides) apply_override(cfg, kv);
  if (seed_given) cfg.seed = seed;
  cfg.validate();
  std::cout << "# resolved config\n";
  print_config(cfg, std::cout);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HBPN single-image super-resolution tool"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed/--threads may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = 0;

  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for all randomness");

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data",
                                  "write LRx{s} and LRx{s}_up mirrors");
  std::string prep_hr, prep_out, prep_scales = "2,4,8";
  prep->add_option("--hr", prep_hr, "directory of HR images")->required();
  prep->add_option("--out", prep_out, "dataset root to fill")->required();
  prep->add_option("--scales", prep_scales, "comma list from {2,4,8}");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_resume;
  tr->add_option("--config", config_path, "key=value config file");
  tr->add_option("--set", overrides, "override, key=value (repeatable)");
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate on a prepared dataset");
  std::string ev_data, ev_ckpt, ev_out = "eval_out";
  int ev_scale = 4;
  bool ev_bicubic = false, ev_ensemble = false, ev_no_save = false;
  ev->add_option("--data", ev_data, "prepared dataset root")->required();
  ev->add_option("--scale", ev_scale, "scale factor")->required();
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint");
  ev->add_flag("--bicubic", ev_bicubic, "pass-through baseline, no model");
  ev->add_flag("--self-ensemble", ev_ensemble, "average 8 dihedral variants");
  ev->add_option("--out", ev_out, "report/output directory");
  ev->add_flag("--no-save", ev_no_save, "skip writing SR images");

  // infer
  auto* in = app.add_subcommand("infer", "super-resolve one LR image");
  std::string in_ckpt, in_img, in_out, in_gt;
  int in_scale = 4;
  bool in_ensemble = false;
  in->add_option("--checkpoint", in_ckpt, "model checkpoint")->required();
  in->add_option("--input", in_img, "LR image")->required();
  in->add_option("--scale", in_scale, "scale factor")->required();
  in->add_option("--out", in_out, "output image path")->required();
  in->add_option("--gt", in_gt, "ground truth for PSNR/SSIM printout");
  in->add_flag("--self-ensemble", in_ensemble, "average 8 dihedral variants");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare variants");
  std::string ab_axis, ab_values;
  ab->add_option("--config", config_path, "key=value config file");
  ab->add_option("--set", overrides, "override, key=value (repeatable)");
  ab->add_option("--axis", ab_axis, "head | depth | modules")->required();
  ab->add_option("--values", ab_values, "comma list of axis values")
      ->required();

  // diagnose
  auto* di = app.add_subcommand("diagnose", "dump per-module artifacts");
  std::string di_ckpt, di_img, di_out;
  di->add_option("--checkpoint", di_ckpt, "model checkpoint")->required();
  di->add_option("--input", di_img, "pre-upsampled input image")->required();
  di->add_option("--out", di_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  seed_given = seed_opt->count() > 0;
  if (threads > 0) kernels::set_threads(threads);

  try {
    if (*prep) {
      std::cout << "# prepare-data hr=" << prep_hr << " out=" << prep_out
                << " scales=" << prep_scales << "\n";
      const PrepareStats st =
          prepare_data(prep_hr, parse_scales(prep_scales), prep_out);
      std::cout << "images=" << st.images << " written=" << st.written
                << " up-to-date=" << st.skipped_up_to_date
                << " failed=" << st.failed << "\n";
      return st.failed > 0 && st.written == 0 ? kExitData : 0;
    }
    if (*tr) {
      TrainConfig cfg = resolve_config(config_path, overrides, seed, seed_given);
      const fs::path resume = tr_resume;
      const TrainResult res = train(cfg, tr_resume.empty() ? nullptr : &resume);
      std::cout << "steps=" << res.steps << " initial_loss=" << res.initial_loss
                << " final_loss=" << res.final_loss << "\ncheckpoint="
                << res.final_checkpoint.string() << "\nloss_log="
                << res.loss_log.string() << "\n";
      return 0;
    }
    if (*ev) {
      if (ev_bicubic && !ev_ckpt.empty()) {
        std::cerr << "eval: --bicubic and --checkpoint are exclusive\n";
        return kExitUsage;
      }
      if (!ev_bicubic && ev_ckpt.empty()) {
        std::cerr << "eval: give --checkpoint or --bicubic\n";
        return kExitUsage;
      }
      std::cout << "# eval data=" << ev_data << " scale=" << ev_scale
                << " checkpoint=" << (ev_bicubic ? "(bicubic)" : ev_ckpt)
                << " self-ensemble=" << (ev_ensemble ? "on" : "off") << "\n";
      EvalOptions opts;
      if (!ev_bicubic) opts.checkpoint = ev_ckpt;
      opts.self_ensemble = ev_ensemble;
      opts.out_dir = ev_out;
      opts.save_outputs = !ev_no_save;
      const MetricsReport report = evaluate_dataset(ev_data, ev_scale, opts);
      std::printf("images=%zu mean_psnr=%.4f mean_ssim=%.4f\n",
                  report.images.size(), report.mean_psnr(),
                  report.mean_ssim());
      return 0;
    }
    if (*in) {
      std::cout << "# infer checkpoint=" << in_ckpt << " input=" << in_img
                << " scale=" << in_scale << " out=" << in_out
                << " self-ensemble=" << (in_ensemble ? "on" : "off") << "\n";
      const Checkpoint ckpt = load_checkpoint(in_ckpt);
      const HBPNModel model = model_from_checkpoint(ckpt);
      InferOptions opts;
      opts.self_ensemble = in_ensemble;
      if (!in_gt.empty()) opts.ground_truth = fs::path(in_gt);
      const InferResult res =
          infer_image(model, load_image(in_img), in_scale, opts);
      save_image(res.sr, in_out);
      if (res.metrics) {
        std::printf("psnr=%.4f ssim=%.4f\n", res.metrics->psnr,
                    res.metrics->ssim);
      }
      return 0;
    }
    if (*ab) {
      TrainConfig cfg = resolve_config(config_path, overrides, seed, seed_given);
      AblateAxis axis;
      if (ab_axis == "head") {
        axis = AblateAxis::Head;
      } else if (ab_axis == "depth") {
        axis = AblateAxis::Depth;
      } else if (ab_axis == "modules") {
        axis = AblateAxis::ModuleCount;
      } else {
        std::cerr << "ablate: axis must be head, depth or modules\n";
        return kExitUsage;
      }
      const AblateReport report = ablate(cfg, axis, split_csv(ab_values));
      std::cout << report.table;
      const fs::path table_path = fs::path(cfg.out_dir) / "ablation.txt";
      fs::create_directories(cfg.out_dir);
      std::ofstream(table_path) << report.table;
      std::cout << "table=" << table_path.string() << "\n";
      return 0;
    }
    if (*di) {
      std::cout << "# diagnose checkpoint=" << di_ckpt << " input=" << di_img
                << " out=" << di_out << "\n";
      diagnose(di_ckpt, di_img, di_out);
      std::cout << "artifacts written to " << di_out << "\n";
      return 0;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
