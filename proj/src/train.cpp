#include "hbpn/train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "hbpn/kernels.hpp"
#include "hbpn/optim.hpp"

namespace fs = std::filesystem;

namespace hbpn {

namespace {

bool is_image_file(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(c));
  return e == ".png" || e == ".ppm" || e == ".pgm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) {
    throw DataError(dir.string() + ": not a directory");
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void quantize_image(ImageRGB& img) {
  for (auto& v : img.planes) v = quantize_byte(v) / 255.0f;
}

ImageRGB extract_region(const ImageRGB& img, int y0, int x0, int h, int w) {
  ImageRGB out(h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(img.plane(c) + static_cast<std::int64_t>(y0 + y) * img.width +
                      x0,
                  w, out.plane(c) + static_cast<std::int64_t>(y) * w);
    }
  }
  return out;
}

void copy_into_batch(const ImageRGB& img, Tensor4& t, int b) {
  float* dst = t.data.data() +
               static_cast<std::int64_t>(b) * 3 * t.shape.h * t.shape.w;
  std::copy(img.planes.begin(), img.planes.end(), dst);
}

struct LoadedPair {
  std::string name;
  ImageRGB input;   // pre-upsampled LR at HR size
  ImageRGB target;  // HR, modcropped to the scale
};

std::vector<LoadedPair> load_training_pairs(const TrainConfig& cfg) {
  const fs::path root = cfg.dataset_root;
  const fs::path hr_dir = root / "HR";
  const fs::path up_dir = root / ("LRx" + std::to_string(cfg.scale) + "_up");
  if (!fs::is_directory(hr_dir) || !fs::is_directory(up_dir)) {
    throw DataError("dataset at '" + root.string() +
                    "' is not prepared: expected HR/ and LRx" +
                    std::to_string(cfg.scale) + "_up/ (run prepare-data)");
  }
  std::vector<LoadedPair> pairs;
  for (const auto& hr_path : list_images(hr_dir)) {
    const fs::path up_path = up_dir / (hr_path.stem().string() + ".png");
    if (!fs::exists(up_path)) {
      std::cerr << "train: no pre-upsampled mirror for "
                << hr_path.filename().string() << ", skipped\n";
      continue;
    }
    LoadedPair pair;
    pair.name = hr_path.stem().string();
    pair.target = modcrop(load_image(hr_path), cfg.scale);
    pair.input = load_image(up_path);
    if (pair.input.height != pair.target.height ||
        pair.input.width != pair.target.width) {
      throw DataError(pair.name + ": pre-upsampled input " +
                      std::to_string(pair.input.height) + "x" +
                      std::to_string(pair.input.width) + " does not match HR " +
                      std::to_string(pair.target.height) + "x" +
                      std::to_string(pair.target.width));
    }
    if (pair.target.height < cfg.patch_size ||
        pair.target.width < cfg.patch_size) {
      std::cerr << "train: " << pair.name << " smaller than patch size, "
                << "skipped\n";
      continue;
    }
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) {
    throw DataError("dataset at '" + root.string() +
                    "' holds no usable training pairs");
  }
  return pairs;
}

void make_batch(const std::vector<LoadedPair>& pairs, const TrainConfig& cfg,
                int batch, std::uint64_t step, TensorPtr& input,
                TensorPtr& target) {
  std::mt19937_64 rng(mix_seed(cfg.seed, step));
  const int p = cfg.patch_size;
  input = make_tensor(Shape4{batch, 3, p, p});
  target = make_tensor(Shape4{batch, 3, p, p});
  for (int b = 0; b < batch; ++b) {
    const LoadedPair& pair = pairs[rng() % pairs.size()];
    const int y0 = static_cast<int>(rng() % (pair.target.height - p + 1));
    const int x0 = static_cast<int>(rng() % (pair.target.width - p + 1));
    const int aug = cfg.augment ? static_cast<int>(rng() % 8) : 0;
    ImageRGB in_patch = extract_region(pair.input, y0, x0, p, p);
    ImageRGB tgt_patch = extract_region(pair.target, y0, x0, p, p);
    if (aug != 0) {
      in_patch = apply_dihedral(in_patch, aug);
      tgt_patch = apply_dihedral(tgt_patch, aug);
    }
    copy_into_batch(in_patch, *input, b);
    copy_into_batch(tgt_patch, *target, b);
  }
}

void write_log_line(std::ofstream& log, std::uint64_t step, double loss) {
  char line[64];
  std::snprintf(line, sizeof(line), "%llu,%.8e\n",
                static_cast<unsigned long long>(step), loss);
  log << line;
  log.flush();
}

}  // namespace

PrepareStats prepare_data(const fs::path& hr_dir,
                          const std::vector<int>& scales,
                          const fs::path& out_root) {
  for (int s : scales) {
    if (s != 2 && s != 4 && s != 8) {
      throw DataError("prepare-data: scale must be 2, 4 or 8, got " +
                      std::to_string(s));
    }
  }
  const auto files = list_images(hr_dir);
  if (files.empty()) {
    throw DataError(hr_dir.string() + ": no images to prepare");
  }
  PrepareStats stats;
  for (int s : scales) {
    fs::create_directories(out_root / ("LRx" + std::to_string(s)));
    fs::create_directories(out_root / ("LRx" + std::to_string(s) + "_up"));
  }
  for (const auto& src : files) {
    ++stats.images;
    ImageRGB hr;
    bool loaded = false;
    for (int s : scales) {
      const fs::path lr_path =
          out_root / ("LRx" + std::to_string(s)) / (src.stem().string() + ".png");
      const fs::path up_path = out_root / ("LRx" + std::to_string(s) + "_up") /
                               (src.stem().string() + ".png");
      const auto src_time = fs::last_write_time(src);
      const bool lr_fresh =
          fs::exists(lr_path) && fs::last_write_time(lr_path) >= src_time;
      const bool up_fresh =
          fs::exists(up_path) && fs::last_write_time(up_path) >= src_time;
      if (lr_fresh && up_fresh) {
        stats.skipped_up_to_date += 2;
        continue;
      }
      try {
        if (!loaded) {
          hr = load_image(src);
          loaded = true;
        }
      } catch (const ImageError& e) {
        std::cerr << "prepare-data: " << e.what() << ", skipped\n";
        ++stats.failed;
        break;
      }
      const ImageRGB cropped = modcrop(hr, s);
      const ImageRGB lr =
          bicubic_resize(cropped, cropped.height / s, cropped.width / s);
      if (lr_fresh) {
        ++stats.skipped_up_to_date;
      } else {
        save_image(lr, lr_path);
        ++stats.written;
      }
      if (up_fresh) {
        ++stats.skipped_up_to_date;
      } else {
        save_image(bicubic_resize(lr, cropped.height, cropped.width), up_path);
        ++stats.written;
      }
    }
  }
  return stats;
}

TrainResult train(const TrainConfig& cfg, const fs::path* resume_from) {
  cfg.validate();
  if (cfg.threads > 0) kernels::set_threads(cfg.threads);
  const auto pairs = load_training_pairs(cfg);

  HBPNModel model;
  std::uint64_t start_step = 0;
  Checkpoint resumed;
  if (resume_from) {
    resumed = load_checkpoint(*resume_from);
    if (!resumed.has_trainer) {
      throw CheckpointError(resume_from->string() +
                            ": no trainer state, cannot resume");
    }
    const ModelConfig want = cfg.model_config();
    const ModelConfig got = resumed.model_cfg;
    if (got.modules != want.modules || got.depth != want.depth ||
        got.base_channels != want.base_channels || got.head != want.head ||
        got.scale != want.scale) {
      std::ostringstream msg;
      msg << "resume: architecture mismatch; config wants K=" << want.modules
          << " T=" << want.depth << " base=" << want.base_channels
          << " head=" << (want.head == HeadKind::WR ? "wr" : "plain")
          << " scale=" << want.scale << ", checkpoint holds K=" << got.modules
          << " T=" << got.depth << " base=" << got.base_channels
          << " head=" << (got.head == HeadKind::WR ? "wr" : "plain")
          << " scale=" << got.scale;
      throw CheckpointError(msg.str());
    }
    if (resumed.trainer.seed != cfg.seed) {
      std::cerr << "train: checkpoint was written with seed "
                << resumed.trainer.seed << ", continuing with config seed "
                << cfg.seed << "\n";
    }
    model = model_from_checkpoint(resumed);
    start_step = resumed.trainer.global_step;
  } else {
    model = HBPNModel::build(cfg.model_config(), cfg.seed);
  }

  std::vector<TensorPtr> plist;
  for (const auto& p : model.named_params()) plist.push_back(p.tensor);
  optim::Adam adam(plist,
                   optim::AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2,
                                     cfg.epsilon, cfg.weight_decay});
  if (resume_from) {
    adam.restore(resumed.trainer.adam_step, std::move(resumed.trainer.m),
                 std::move(resumed.trainer.v));
  }

  fs::create_directories(cfg.out_dir);
  const fs::path log_path = fs::path(cfg.out_dir) / "loss_log.csv";
  std::ofstream log(log_path, resume_from ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError(log_path.string() + ": cannot open loss log");

  auto trainer_state = [&]() {
    TrainerState st;
    st.adam_step = adam.step_count();
    st.global_step = 0;  // set by caller
    st.seed = cfg.seed;
    st.m = adam.moments_m();
    st.v = adam.moments_v();
    return st;
  };

  TrainResult res;
  res.loss_log = log_path;
  const std::int64_t total = cfg.total_steps();
  bool first = true;
  try {
    for (std::int64_t step = static_cast<std::int64_t>(start_step);
         step < total; ++step) {
      const int batch = cfg.batch_at_step(step);
      TensorPtr input, target;
      make_batch(pairs, cfg, batch, static_cast<std::uint64_t>(step), input,
                 target);
      ad::Tape tape;
      auto out = model.forward(&tape, input);
      auto loss = cfg.loss == LossKind::MSE
                      ? ad::mse_loss(&tape, out.sr, target)
                      : ad::l1_loss(&tape, out.sr, target);
      const double lval = loss->data[0];
      if (first) {
        res.initial_loss = lval;
        first = false;
      }
      res.final_loss = lval;
      adam.zero_grad();
      tape.backward(loss);
      adam.step();
      ++res.steps;
      if ((step + 1) % cfg.log_interval == 0 || step + 1 == total) {
        write_log_line(log, static_cast<std::uint64_t>(step + 1), lval);
      }
      if ((step + 1) % cfg.checkpoint_interval == 0 && step + 1 < total) {
        TrainerState st = trainer_state();
        st.global_step = static_cast<std::uint64_t>(step + 1);
        save_checkpoint(fs::path(cfg.out_dir) /
                            ("ckpt_" + std::to_string(step + 1) + ".ckpt"),
                        model, &st);
      }
    }
  } catch (const NumericError& e) {
    std::cerr << "train: aborted (" << e.what()
              << "); the last periodic checkpoint is retained\n";
    throw;
  }
  TrainerState st = trainer_state();
  st.global_step = static_cast<std::uint64_t>(total);
  res.final_checkpoint = fs::path(cfg.out_dir) / "model_final.ckpt";
  save_checkpoint(res.final_checkpoint, model, &st);
  return res;
}

MetricsReport evaluate_dataset(const fs::path& dataset_root, int scale,
                               const EvalOptions& opts) {
  const fs::path hr_dir = dataset_root / "HR";
  const fs::path up_dir =
      dataset_root / ("LRx" + std::to_string(scale) + "_up");
  const auto files = list_images(hr_dir);
  if (files.empty()) throw DataError(hr_dir.string() + ": no images");

  HBPNModel model;
  bool passthrough = opts.checkpoint.empty();
  if (!passthrough) {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    if (ckpt.model_cfg.scale != scale) {
      throw DataError("eval: requested scale " + std::to_string(scale) +
                      " but checkpoint was trained for scale " +
                      std::to_string(ckpt.model_cfg.scale) + " (K=" +
                      std::to_string(ckpt.model_cfg.modules) + ", T=" +
                      std::to_string(ckpt.model_cfg.depth) + ", base=" +
                      std::to_string(ckpt.model_cfg.base_channels) + ")");
    }
    model = model_from_checkpoint(ckpt);
  }

  MetricsReport report;
  report.scale = scale;
  report.crop = scale;
  report.self_ensemble = opts.self_ensemble;
  bool warned_missing = false;
  if (opts.save_outputs && !opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir / "sr");
  }
  for (const auto& hr_path : files) {
    const ImageRGB hr = modcrop(load_image(hr_path), scale);
    const fs::path up_path = up_dir / (hr_path.stem().string() + ".png");
    ImageRGB lrup;
    if (fs::exists(up_path)) {
      lrup = load_image(up_path);
    } else {
      if (!warned_missing) {
        std::cerr << "eval: " << up_path.string()
                  << " missing, degrading on the fly (run prepare-data for "
                     "file-backed inputs)\n";
        warned_missing = true;
      }
      ImageRGB lr = bicubic_resize(hr, hr.height / scale, hr.width / scale);
      quantize_image(lr);
      lrup = bicubic_resize(lr, hr.height, hr.width);
      quantize_image(lrup);
    }
    if (lrup.height != hr.height || lrup.width != hr.width) {
      throw DataError(hr_path.stem().string() + ": pre-upsampled input " +
                      std::to_string(lrup.height) + "x" +
                      std::to_string(lrup.width) + " does not match HR " +
                      std::to_string(hr.height) + "x" +
                      std::to_string(hr.width));
    }
    ImageRGB sr;
    if (passthrough) {
      sr = lrup;
    } else {
      const PaddedImage padded =
          pad_to_multiple(lrup, model.cfg.pad_multiple());
      sr = opts.self_ensemble
               ? self_ensemble_infer(model, padded.image, padded.orig_h,
                                     padded.orig_w)
               : crop(model_infer(model, padded.image), padded.orig_h,
                      padded.orig_w);
    }
    quantize_image(sr);  // metrics see the saved 8-bit representation
    if (opts.save_outputs && !opts.out_dir.empty()) {
      save_image(sr, opts.out_dir / "sr" / (hr_path.stem().string() + ".png"));
    }
    ImageMetrics m;
    m.name = hr_path.stem().string();
    m.psnr = psnr_y(sr, hr, scale);
    m.ssim = ssim_y(sr, hr, scale);
    report.images.push_back(std::move(m));
  }
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    write_report(report, opts.out_dir / "report.txt",
                 opts.out_dir / "records.jsonl");
  }
  return report;
}

InferResult infer_image(const HBPNModel& model, const ImageRGB& lr, int scale,
                        const InferOptions& opts) {
  if (model.cfg.scale != scale) {
    throw DataError("infer: requested scale " + std::to_string(scale) +
                    " but checkpoint was trained for scale " +
                    std::to_string(model.cfg.scale));
  }
  const ImageRGB lrup =
      bicubic_resize(lr, lr.height * scale, lr.width * scale);
  const PaddedImage padded = pad_to_multiple(lrup, model.cfg.pad_multiple());
  InferResult res;
  res.sr = opts.self_ensemble
               ? self_ensemble_infer(model, padded.image, padded.orig_h,
                                     padded.orig_w)
               : crop(model_infer(model, padded.image), padded.orig_h,
                      padded.orig_w);
  quantize_image(res.sr);
  if (opts.ground_truth) {
    const ImageRGB gt_full = load_image(*opts.ground_truth);
    if (gt_full.height < res.sr.height || gt_full.width < res.sr.width) {
      throw DataError("infer: ground truth smaller than the SR output");
    }
    const ImageRGB gt = crop(gt_full, res.sr.height, res.sr.width);
    ImageMetrics m;
    m.name = opts.ground_truth->stem().string();
    m.psnr = psnr_y(res.sr, gt, scale);
    m.ssim = ssim_y(res.sr, gt, scale);
    res.metrics = m;
  }
  return res;
}

AblateReport ablate(const TrainConfig& base, AblateAxis axis,
                    const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("ablate: no axis values given");
  AblateReport report;
  for (const auto& value : values) {
    TrainConfig cfg = base;
    std::string label;
    switch (axis) {
      case AblateAxis::Head:
        if (value == "wr") {
          cfg.head = HeadKind::WR;
          label = "WR model";
        } else if (value == "plain") {
          cfg.head = HeadKind::Plain;
          label = "Plain model";
        } else {
          throw ConfigError("ablate: head value must be wr or plain, got '" +
                            value + "'");
        }
        break;
      case AblateAxis::Depth: {
        const int t = std::stoi(value);
        if (t < 1 || t > 4) {
          throw ConfigError("ablate: depth must be in 1..4, got " + value);
        }
        cfg.depth = t;
        label = "HG-" + std::to_string(t);
        break;
      }
      case AblateAxis::ModuleCount: {
        const int k = std::stoi(value);
        if (k < 2 || k > 4) {
          throw ConfigError("ablate: module count must be in 2..4, got " +
                            value);
        }
        cfg.modules = k;
        label = (k == 2 ? "S" : k == 3 ? "M" : "L") + std::string(" (K=") +
                std::to_string(k) + ")";
        break;
      }
    }
    cfg.out_dir = base.out_dir + "/ablate_" +
                  std::to_string(report.rows.size()) + "_" + value;
    const TrainResult tr = train(cfg);
    EvalOptions eopts;
    eopts.checkpoint = tr.final_checkpoint;
    eopts.out_dir = fs::path(cfg.out_dir) / "eval";
    eopts.save_outputs = false;
    const MetricsReport mr =
        evaluate_dataset(cfg.dataset_root, cfg.scale, eopts);
    const Checkpoint ckpt = load_checkpoint(tr.final_checkpoint);
    std::int64_t params = 0;
    for (const auto& [name, t] : ckpt.params) params += t.numel();
    report.rows.push_back(
        AblateRow{label, params, tr.final_loss, mr.mean_psnr(), mr.mean_ssim()});
  }
  std::ostringstream table;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %6s %12s %10s %10s\n", "Algorithm",
                "Scale", "Params", "PSNR", "SSIM");
  table << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-14s %6d %12lld %10.2f %10.4f\n",
                  row.label.c_str(), base.scale,
                  static_cast<long long>(row.parameter_count), row.psnr,
                  row.ssim);
    table << line;
  }
  report.table = table.str();
  return report;
}

void diagnose(const fs::path& checkpoint_path, const fs::path& image_path,
              const fs::path& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const HBPNModel model = model_from_checkpoint(ckpt);
  const ImageRGB input = load_image(image_path);
  const PaddedImage padded = pad_to_multiple(input, model.cfg.pad_multiple());

  const auto out = model.forward(nullptr, image_to_tensor(padded.image));
  fs::create_directories(out_dir);

  const int K = static_cast<int>(out.coarse.size());
  const int h = padded.orig_h, w = padded.orig_w;
  const std::int64_t plane = static_cast<std::int64_t>(padded.image.height) *
                             padded.image.width;

  for (int k = 0; k < K; ++k) {
    save_image(crop(tensor_to_image(*out.coarse[k]), h, w),
               out_dir / ("coarse_" + std::to_string(k) + ".png"));
  }

  // weighting maps: channel mean, then min-max into [0,255]; an all-equal
  // map exports as zeros
  for (int k = 0; k < K; ++k) {
    const Tensor4& wm = *out.weight_maps[k];
    std::vector<float> mean(plane);
    for (std::int64_t i = 0; i < plane; ++i) {
      mean[i] =
          (wm.data[i] + wm.data[plane + i] + wm.data[2 * plane + i]) / 3.0f;
    }
    const auto [mn_it, mx_it] = std::minmax_element(mean.begin(), mean.end());
    const float mn = *mn_it, mx = *mx_it;
    if (mx > mn) {
      for (auto& v : mean) v = (v - mn) / (mx - mn);
    } else {
      std::fill(mean.begin(), mean.end(), 0.0f);
    }
    std::vector<float> cropped(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
      std::copy_n(mean.begin() + static_cast<std::int64_t>(y) * padded.image.width, w,
                  cropped.begin() + static_cast<std::int64_t>(y) * w);
    }
    save_gray(cropped, h, w, out_dir / ("wmap_" + std::to_string(k) + ".png"));
  }

  // softmax probability maps across modules, per channel and pixel
  std::vector<std::vector<float>> probs(K);
  for (int k = 0; k < K; ++k) probs[k].resize(3 * plane);
  const std::int64_t count = 3 * plane;
  for (std::int64_t i = 0; i < count; ++i) {
    float mx = out.weight_maps[0]->data[i];
    for (int k = 1; k < K; ++k) mx = std::max(mx, out.weight_maps[k]->data[i]);
    float sum = 0.0f;
    for (int k = 0; k < K; ++k) {
      const float e = std::exp(out.weight_maps[k]->data[i] - mx);
      probs[k][i] = e;
      sum += e;
    }
    float total = 0.0f;
    for (int k = 0; k < K; ++k) {
      probs[k][i] /= sum;
      total += probs[k][i];
    }
    if (std::fabs(total - 1.0f) > 1e-5f) {
      throw NumericError("diagnose: probability map does not sum to 1");
    }
  }
  for (int k = 0; k < K; ++k) {
    ImageRGB pimg(padded.image.height, padded.image.width);
    std::copy(probs[k].begin(), probs[k].end(), pimg.planes.begin());
    save_image(crop(pimg, h, w),
               out_dir / ("prob_" + std::to_string(k) + ".png"));
  }

  std::ofstream table(out_dir / "activations.txt");
  const auto pct = activation_percentage(model, image_to_tensor(padded.image));
  for (std::size_t k = 0; k < pct.size(); ++k) {
    char line[64];
    std::snprintf(line, sizeof(line), "SR-HG-%zu %.2f%%\n", k + 1, pct[k]);
    table << line;
  }
}

}  // namespace hbpn
