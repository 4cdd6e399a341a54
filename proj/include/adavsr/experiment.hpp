#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adavsr/config.hpp"

namespace adavsr {

/// One held-out evaluation clip: ground truth, its degraded input, and the
/// task that produced it.
struct HeldOutCase {
  Video hr;
  Video lr;
  DegradationTask task;
};

struct ToyData {
  std::vector<Video> train;
  std::vector<HeldOutCase> held_out;
};

/// Synthetic videos split into a training pool and held-out clips degraded
/// with tasks drawn from the held-out task distribution.
ToyData make_toy_data(const RunConfig& cfg);

struct AdaptationScore {
  double psnr_before = 0.0;
  double psnr_after = 0.0;
  double ssim_before = 0.0;
  double ssim_after = 0.0;
  int max_gradient_updates = 0;
};

/// Mean PSNR/SSIM on the held-out clips before and after internal
/// adaptation (gamma and step count from cfg.train).
AdaptationScore score_adaptation(const Model& init, const std::vector<HeldOutCase>& cases, const RunConfig& cfg);

struct FastAdaptationResult {
  AdaptationScore meta;      // meta-trained init
  AdaptationScore baseline;  // pretrain-only init
  double pretrain_seconds = 0.0;
  double meta_seconds = 0.0;
  double total_seconds = 0.0;
};

using ProgressLog = std::function<void(const LogRow&)>;

/// Pretrain, meta-train, then adapt both inits on the held-out set.
FastAdaptationResult run_fast_adaptation(const RunConfig& cfg, const ToyData& data, const ProgressLog& log = {});

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  // Per seed, mean adapted PSNR of each configuration.
  std::vector<double> both, tsr_only, ssr_only;
  double median_both = 0.0, median_tsr_only = 0.0, median_ssr_only = 0.0;
};

/// Pretraining ablation: both modules, TSR only, SSR only; each followed
/// by meta-training and held-out adaptation.
AblationResult run_ablation(const RunConfig& cfg, const ToyData& data, const ProgressLog& log = {});

}  // namespace adavsr
