#include "adavsr/experiment.hpp"

#include <algorithm>
#include <chrono>

#include "adavsr/metrics.hpp"
#include "adavsr/synthetic.hpp"

namespace adavsr {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ToyData make_toy_data(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  std::vector<Video> all = synthetic_dataset(e.data_seed, e.videos, e.frames, e.size);
  ToyData data;
  TaskDistribution held = cfg.tasks;
  held.seed = e.held_out_task_seed;
  const int n_train = e.videos - e.held_out;
  for (int i = 0; i < e.videos; ++i) {
    if (i < n_train) {
      data.train.push_back(std::move(all[static_cast<size_t>(i)]));
      continue;
    }
    const DegradationTask task = sample_task(held, static_cast<std::uint64_t>(i - n_train));
    Video hr = std::move(all[static_cast<size_t>(i)]);
    // Odd-length ground truth so the 2M-1 reconstruction covers it.
    if (hr.frame_count() % 2 == 0) hr = hr.head(hr.frame_count() - 1);
    Video lr = temporal_downscale(spatial_downscale(hr, task), task.temporal);
    data.held_out.push_back(HeldOutCase{std::move(hr), std::move(lr), task});
  }
  return data;
}

AdaptationScore score_adaptation(const Model& init, const std::vector<HeldOutCase>& cases, const RunConfig& cfg) {
  AdaptationScore s;
  for (const HeldOutCase& c : cases) {
    const KernelProvider provider =
        cfg.adapt.provider == KernelProvider::Mode::oracle ? KernelProvider::oracle(c.task) : KernelProvider::bicubic();
    const InternalPair pair = build_internal_pair(c.lr, provider);
    const AdaptResult r =
        internal_adapt(init, pair, cfg.train.gamma, cfg.train.internal_steps, cfg.train.loss, cfg.train.internal_reduction);
    s.max_gradient_updates = std::max(s.max_gradient_updates, r.gradient_updates);
    const MetricsReport before = evaluate(infer(init, c.lr), c.hr);
    const MetricsReport after = evaluate(infer(r.params, c.lr), c.hr);
    s.psnr_before += before.mean_psnr_db;
    s.psnr_after += after.mean_psnr_db;
    s.ssim_before += before.mean_ssim;
    s.ssim_after += after.mean_ssim;
  }
  const double n = static_cast<double>(cases.size());
  s.psnr_before /= n;
  s.psnr_after /= n;
  s.ssim_before /= n;
  s.ssim_after /= n;
  return s;
}

FastAdaptationResult run_fast_adaptation(const RunConfig& cfg, const ToyData& data, const ProgressLog& log) {
  const auto t0 = std::chrono::steady_clock::now();
  FastAdaptationResult out;
  Checkpoint state;
  state.model = init_params(cfg.model, cfg.train.seed);
  TrainHooks hooks;
  hooks.log = log;
  state = pretrain(data.train, cfg.train, state, hooks);
  out.pretrain_seconds = seconds_since(t0);
  const Model pretrained = state.model;

  TaskDistribution dist = cfg.tasks;
  state = meta_train(data.train, dist, cfg.train, state, hooks);
  out.meta_seconds = seconds_since(t0) - out.pretrain_seconds;

  out.meta = score_adaptation(state.model, data.held_out, cfg);
  out.baseline = score_adaptation(pretrained, data.held_out, cfg);
  out.total_seconds = seconds_since(t0);
  return out;
}

AblationResult run_ablation(const RunConfig& cfg, const ToyData& data, const ProgressLog& log) {
  AblationResult r;
  r.seeds = cfg.experiment.ablation_seeds;
  for (std::uint64_t seed : r.seeds) {
    for (int variant = 0; variant < 3; ++variant) {
      RunConfig c = cfg;
      c.train.seed = seed;
      c.train.pretrain_ssr = variant != 1;
      c.train.pretrain_tsr = variant != 2;
      Checkpoint state;
      state.model = init_params(c.model, seed);
      TrainHooks hooks;
      hooks.log = log;
      state = pretrain(data.train, c.train, state, hooks);
      state = meta_train(data.train, c.tasks, c.train, state, hooks);
      const double psnr = score_adaptation(state.model, data.held_out, c).psnr_after;
      (variant == 0 ? r.both : variant == 1 ? r.tsr_only : r.ssr_only).push_back(psnr);
    }
  }
  r.median_both = median(r.both);
  r.median_tsr_only = median(r.tsr_only);
  r.median_ssr_only = median(r.ssr_only);
  return r;
}

}  // namespace adavsr
