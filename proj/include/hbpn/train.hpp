#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hbpn/checkpoint.hpp"
#include "hbpn/config.hpp"
#include "hbpn/metrics.hpp"

namespace hbpn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- dataset preparation ----
struct PrepareStats {
  int images = 0;
  int written = 0;
  int skipped_up_to_date = 0;
  int failed = 0;
};
// Writes <out_root>/LRx{s}/ and <out_root>/LRx{s}_up/ mirrors for every
// readable image in hr_dir. Re-runs skip outputs newer than their source.
PrepareStats prepare_data(const std::filesystem::path& hr_dir,
                          const std::vector<int>& scales,
                          const std::filesystem::path& out_root);

// ---- training ----
struct TrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::uint64_t steps = 0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_log;
};
TrainResult train(const TrainConfig& cfg,
                  const std::filesystem::path* resume_from = nullptr);

// ---- evaluation ----
struct EvalOptions {
  std::filesystem::path checkpoint;  // empty = bicubic pass-through
  bool self_ensemble = false;
  std::filesystem::path out_dir;
  bool save_outputs = true;
};
MetricsReport evaluate_dataset(const std::filesystem::path& dataset_root,
                               int scale, const EvalOptions& opts);

// ---- single-image inference ----
struct InferOptions {
  bool self_ensemble = false;
  std::optional<std::filesystem::path> ground_truth;
};
struct InferResult {
  ImageRGB sr;
  std::optional<ImageMetrics> metrics;
};
InferResult infer_image(const HBPNModel& model, const ImageRGB& lr, int scale,
                        const InferOptions& opts);

// ---- ablation drivers ----
enum class AblateAxis { Head, Depth, ModuleCount };
struct AblateRow {
  std::string label;
  std::int64_t parameter_count = 0;
  double final_loss = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};
struct AblateReport {
  std::vector<AblateRow> rows;
  std::string table;  // rendered side-by-side comparison
};
AblateReport ablate(const TrainConfig& base, AblateAxis axis,
                    const std::vector<std::string>& values);

// ---- diagnostics ----
// Writes per-module coarse images, min-max normalized weighting maps,
// softmax probability maps and the activation-percentage table.
void diagnose(const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& image_path,
              const std::filesystem::path& out_dir);

}  // namespace hbpn
