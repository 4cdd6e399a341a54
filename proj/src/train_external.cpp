#include "adavsr/train_external.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "adavsr/logging.hpp"
#include "adavsr/rng.hpp"

namespace adavsr {

void validate(const TrainingConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !(cfg.alpha_phi >= 0.0)) throw Error("config: inner rates must be >= 0");
  if (!(cfg.beta >= 0.0) || !(cfg.gamma >= 0.0) || !(cfg.pretrain_lr >= 0.0))
    throw Error("config: learning rates must be >= 0");
  if (cfg.inner_iters < 0 || cfg.internal_steps < 0) throw Error("config: iteration counts must be >= 0");
  if (cfg.batch_size < 1) throw Error("config: batch_size must be >= 1");
  if (cfg.patch_size < 16 || cfg.patch_size % 4 != 0) throw Error("config: patch_size must be a multiple of 4, >= 16");
  if (cfg.meta_task_count < 1 || cfg.meta_videos_per_task < 1) throw Error("config: meta batch sizes must be >= 1");
  if (cfg.meta_train_crop < 0 || cfg.meta_train_crop % 16 != 0)
    throw Error("config: meta_train_crop must be 0 or a multiple of 16");
  if (cfg.meta_test_crop < 0 || cfg.meta_test_crop % 4 != 0)
    throw Error("config: meta_test_crop must be 0 or a multiple of 4");
  if (cfg.pretrain_steps < 0 || cfg.meta_steps < 0 || cfg.checkpoint_every < 0)
    throw Error("config: step counts must be >= 0");
  if (cfg.workers < 1) throw Error("config: workers must be >= 1");
  if (!(cfg.loss.epsilon > 0.0)) throw Error("config: loss epsilon must be > 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class S>
bool all_finite(const std::vector<S>& v) {
  for (const S& x : v)
    if (!std::isfinite(static_cast<double>(value_of(x)))) return false;
  return true;
}

template <class S>
bool all_finite(const ModelParams<S>& m) {
  return all_finite(m.tsr.values) && all_finite(m.ssr.values);
}

template <class S>
void check_finite(double loss, const ModelParams<S>* grad, const std::string& where) {
  if (!std::isfinite(loss)) throw TrainingDiverged(where + ": non-finite loss");
  if (grad && !all_finite(*grad)) throw TrainingDiverged(where + ": non-finite gradient");
}

template <class S>
void axpy(Params<S>& p, double a, const Params<S>& x) {
  for (size_t i = 0; i < p.values.size(); ++i) p.values[i] = p.values[i] + x.values[i] * S(a);
}

std::vector<PipelineSample> train_samples(std::span<const TrainTriple> train) {
  std::vector<PipelineSample> out;
  out.reserve(train.size());
  for (const TrainTriple& t : train) out.push_back({&t.ts, &t.s, &t.lr});
  return out;
}

std::vector<PipelineSample> test_samples(std::span<const TestTriple> test) {
  std::vector<PipelineSample> out;
  out.reserve(test.size());
  for (const TestTriple& t : test) out.push_back({&t.lr, &t.lr_hfr, &t.hr});
  return out;
}

Video crop_patch(const Video& v, int size, std::mt19937_64& rng) {
  const int top = 4 * uniform_int(rng, (v.height() - size) / 4 + 1);
  const int left = 4 * uniform_int(rng, (v.width() - size) / 4 + 1);
  return extract_patch(v, top, left, size);
}

}  // namespace

PretrainDatasets make_pretrain_batch(std::span<const Video> hr_videos, int batch_size, int patch_size,
                                     std::uint64_t seed, std::int64_t step) {
  if (hr_videos.empty()) throw Error("pretrain: no videos");
  PretrainDatasets out;
  auto rng = keyed_rng({seed, static_cast<std::uint64_t>(step), 0x9e7aULL});
  const KernelSpec bicubic{KernelKind::bicubic};
  for (int b = 0; b < batch_size; ++b) {
    const Video& v = hr_videos[static_cast<size_t>(uniform_int(rng, static_cast<int>(hr_videos.size())))];
    if (v.height() < patch_size || v.width() < patch_size)
      throw Error("pretrain: patch_size exceeds video size");
    // D_s: a two-frame patch and its bicubic x4 downscale.
    const int t = uniform_int(rng, v.frame_count() - 1);
    const int pair[2] = {t, t + 1};
    Video hr_s = crop_patch(v.select_frames(pair), patch_size, rng);
    Video lr_s = spatial_downscale(hr_s, bicubic);
    out.d_s.push_back({std::move(lr_s), std::move(hr_s)});

    // D_t: an odd-length clip and its alternate frames.
    const int len = v.frame_count() % 2 == 1 ? v.frame_count() : v.frame_count() - 1;
    if (len < 3) throw Error("pretrain: TSR pairs need at least 3 frames");
    Video hr_t = crop_patch(v.head(len), patch_size, rng);
    Video lfr = temporal_downscale(hr_t, TemporalOp::alternate);
    out.d_t.push_back({std::move(lfr), std::move(hr_t)});
  }
  return out;
}

namespace {

double ssr_pretrain_objective(const ParamSet& phi, std::span<const SsrPair> batch, const LossSpec& loss,
                              ParamSet* grad) {
  std::vector<Video> in, tgt;
  for (const SsrPair& p : batch) {
    if (p.hr.height() != 4 * p.lr.height() || p.hr.width() != 4 * p.lr.width() ||
        p.hr.frame_count() != p.lr.frame_count() || p.hr.channels() != p.lr.channels())
      throw Error("loss_ssr_pretrain: shape mismatch");
    in.push_back(p.lr);
    tgt.push_back(p.hr);
  }
  return ssr_objective<float>(phi, in, tgt, loss, grad);
}

double tsr_pretrain_objective(const ParamSet& theta, std::span<const TsrPair> batch, const LossSpec& loss,
                              ParamSet* grad) {
  std::vector<PipelineSample> samples;
  for (const TsrPair& p : batch) {
    if (p.hr.frame_count() != 2 * p.lfr.frame_count() - 1)
      throw Error("loss_tsr_pretrain: length mismatch, |V_HR| must be 2|V_LR| - 1");
    samples.push_back({&p.lfr, &p.hr, nullptr});
  }
  Model m{theta, ParamSet{}};
  Model g;
  if (grad) g = Model{zeros_like(theta), ParamSet{}};
  const double v = pipeline_objective<float>(m, samples, loss, grad ? &g : nullptr);
  if (grad) *grad = std::move(g.tsr);
  return v;
}

}  // namespace

double loss_ssr_pretrain(const ParamSet& phi, std::span<const SsrPair> batch, const LossSpec& loss) {
  return ssr_pretrain_objective(phi, batch, loss, nullptr);
}

double loss_tsr_pretrain(const ParamSet& theta, std::span<const TsrPair> batch, const LossSpec& loss) {
  return tsr_pretrain_objective(theta, batch, loss, nullptr);
}

template <class S>
S task_loss(const ModelParams<S>& params, std::span<const TrainTriple> train, const LossSpec& loss,
            ModelParams<S>* grad) {
  const auto samples = train_samples(train);
  return pipeline_objective<S>(params, samples, loss, grad);
}

template <class S>
S test_loss(const ModelParams<S>& params, std::span<const TestTriple> test, const LossSpec& loss,
            ModelParams<S>* grad, ObjectiveStats* stats) {
  const auto samples = test_samples(test);
  return pipeline_objective<S>(params, samples, loss, grad, stats);
}

template <class S>
ModelParams<S> task_loss_hvp(const ModelParams<S>& params, const ModelParams<S>& direction,
                             std::span<const TrainTriple> train, const LossSpec& loss) {
  using D = Dual<S>;
  auto lift = [](const Params<S>& p, const Params<S>& d) {
    Params<D> out{p.net, std::vector<D>(p.values.size())};
    for (size_t i = 0; i < p.values.size(); ++i) out.values[i] = D(p.values[i], d.values[i]);
    return out;
  };
  ModelParams<D> x{lift(params.tsr, direction.tsr), lift(params.ssr, direction.ssr)};
  ModelParams<D> g = zeros_like(x);
  task_loss<D>(x, train, loss, &g);
  ModelParams<S> out = zeros_like(params);
  for (size_t i = 0; i < out.tsr.values.size(); ++i) out.tsr.values[i] = g.tsr.values[i].d;
  for (size_t i = 0; i < out.ssr.values.size(); ++i) out.ssr.values[i] = g.ssr.values[i].d;
  return out;
}

template <class S>
ModelParams<S> inner_adapt(const ModelParams<S>& params, std::span<const TrainTriple> train, InnerRates rates,
                           int inner_iters, const LossSpec& loss, std::vector<ModelParams<S>>* trajectory,
                           std::vector<double>* losses) {
  if (!(rates.theta >= 0.0) || !(rates.phi >= 0.0)) throw Error("inner_adapt: rates must be >= 0");
  LossSpec descent = loss;
  descent.reduction = rates.reduction;
  ModelParams<S> p = params;
  for (int k = 0; k < inner_iters; ++k) {
    ModelParams<S> g = zeros_like(p);
    const double l = static_cast<double>(task_loss<S>(p, train, descent, &g));
    check_finite(l, &g, "inner_adapt step " + std::to_string(k));
    if (trajectory) trajectory->push_back(p);
    if (losses) losses->push_back(l);
    sgd_step<S>(p.tsr.values, g.tsr.values, rates.theta);
    sgd_step<S>(p.ssr.values, g.ssr.values, rates.phi);
  }
  return p;
}

template <class S>
MetaGradient<S> meta_gradient(const ModelParams<S>& params, const MetaBatch& batch, InnerRates rates,
                              int inner_iters, bool second_order, const LossSpec& loss) {
  std::vector<ModelParams<S>> trajectory;
  std::vector<double> losses;
  const ModelParams<S> adapted =
      inner_adapt(params, batch.train, rates, inner_iters, loss, second_order ? &trajectory : nullptr, &losses);

  MetaGradient<S> out;
  out.grad = zeros_like(params);
  ObjectiveStats stats;
  out.test_loss = static_cast<double>(test_loss<S>(adapted, batch.test, loss, &out.grad, &stats));
  check_finite(out.test_loss, &out.grad, "meta_gradient test loss");
  out.test_psnr = stats.final_psnr();
  if (!losses.empty()) {
    double sum = 0.0;
    for (double l : losses) sum += l;
    out.inner_loss_mean = sum / static_cast<double>(losses.size());
  }

  if (second_order) {
    LossSpec descent = loss;
    descent.reduction = rates.reduction;
    // Reverse through p_{k+1} = p_k - A g(p_k): v <- (I - A H_k) v, with H_k
    // symmetric, so v <- v - H_k (A v).
    for (int k = inner_iters - 1; k >= 0; --k) {
      ModelParams<S> u = out.grad;
      for (S& x : u.tsr.values) x = x * S(rates.theta);
      for (S& x : u.ssr.values) x = x * S(rates.phi);
      const ModelParams<S> hv = task_loss_hvp(trajectory[static_cast<size_t>(k)], u, batch.train, descent);
      axpy(out.grad.tsr, -1.0, hv.tsr);
      axpy(out.grad.ssr, -1.0, hv.ssr);
    }
    check_finite(out.test_loss, &out.grad, "meta_gradient backward");
  }
  return out;
}

template <class S>
double meta_objective(const ModelParams<S>& params, const MetaBatch& batch, InnerRates rates, int inner_iters,
                      const LossSpec& loss) {
  const ModelParams<S> adapted = inner_adapt(params, batch.train, rates, inner_iters, loss);
  return static_cast<double>(test_loss<S>(adapted, batch.test, loss));
}

MetaStepResult meta_step(Model& params, OptimizerState& optimizer, std::span<const MetaBatch> batches,
                         const TrainingConfig& cfg) {
  if (batches.empty()) throw Error("meta_step: empty batch");
  const InnerRates rates{cfg.alpha, cfg.alpha_phi, cfg.inner_reduction};
  std::vector<MetaGradient<float>> results(batches.size());
  std::vector<std::exception_ptr> errors(batches.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < batches.size(); i = next++) {
      try {
        results[i] = meta_gradient<float>(params, batches[i], rates, cfg.inner_iters, cfg.second_order, cfg.loss);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.workers, static_cast<int>(batches.size()));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (size_t i = 0; i < batches.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const TrainingDiverged& e) {
      log_error("meta_step: task {} ({}) diverged: {}", i, format_task(batches[i].task_train), e.what());
      throw;
    }
  }

  // Fixed-order reduction keeps the update independent of worker count.
  Model total = zeros_like(params);
  MetaStepResult r;
  for (const auto& res : results) {
    axpy(total.tsr, 1.0, res.grad.tsr);
    axpy(total.ssr, 1.0, res.grad.ssr);
    r.inner_loss_mean += res.inner_loss_mean;
    r.test_loss_mean += res.test_loss;
    r.test_psnr_mean += res.test_psnr;
  }
  const double n = static_cast<double>(batches.size());
  r.inner_loss_mean /= n;
  r.test_loss_mean /= n;
  r.test_psnr_mean /= n;
  if (!all_finite(total)) throw TrainingDiverged("meta_step: non-finite meta-gradient");
  if (cfg.beta > 0.0) {
    adam_step(params.tsr.values, total.tsr.values, optimizer.tsr, cfg.beta);
    adam_step(params.ssr.values, total.ssr.values, optimizer.ssr, cfg.beta);
  }
  return r;
}

CsvLog::CsvLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open log " + path.string());
  if (fresh) out_ << kLogHeader << "\n" << std::flush;
}

void CsvLog::write(const LogRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%s,%.9g,%.9g,%.3f,%.6f\n", static_cast<long long>(row.step),
                row.phase.c_str(), row.loss_inner_mean, row.loss_test_mean, row.wall_seconds, row.psnr_db);
  out_ << buf << std::flush;
}

Checkpoint pretrain(std::span<const Video> hr_videos, const TrainingConfig& cfg, Checkpoint state,
                    const TrainHooks& hooks) {
  validate(cfg);
  if (state.phase != "pretrain") {
    state.phase = "pretrain";
    state.step = 0;
    state.optimizer = OptimizerState{};
  }
  if (!state.optimizer) state.optimizer = OptimizerState{};
  const auto t0 = Clock::now();
  while (state.step < cfg.pretrain_steps) {
    const PretrainDatasets batch = make_pretrain_batch(hr_videos, cfg.batch_size, cfg.patch_size, cfg.seed, state.step);
    LogRow row{state.step + 1, "pretrain"};
    if (cfg.pretrain_ssr) {
      ParamSet g = zeros_like(state.model.ssr);
      row.loss_inner_mean = ssr_pretrain_objective(state.model.ssr, batch.d_s, cfg.loss, &g);
      check_finite(row.loss_inner_mean, static_cast<const Model*>(nullptr), "pretrain ssr");
      if (!all_finite(g.values)) throw TrainingDiverged("pretrain ssr: non-finite gradient");
      adam_step(state.model.ssr.values, g.values, state.optimizer->ssr, cfg.pretrain_lr);
    }
    if (cfg.pretrain_tsr) {
      ParamSet g = zeros_like(state.model.tsr);
      row.loss_test_mean = tsr_pretrain_objective(state.model.tsr, batch.d_t, cfg.loss, &g);
      check_finite(row.loss_test_mean, static_cast<const Model*>(nullptr), "pretrain tsr");
      if (!all_finite(g.values)) throw TrainingDiverged("pretrain tsr: non-finite gradient");
      adam_step(state.model.tsr.values, g.values, state.optimizer->tsr, cfg.pretrain_lr);
    }
    ++state.step;
    row.wall_seconds = seconds_since(t0);
    if (hooks.log) hooks.log(row);
    const bool last = state.step == cfg.pretrain_steps;
    if (hooks.checkpoint && (last || (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)))
      hooks.checkpoint(state);
  }
  return state;
}

std::vector<MetaBatch> sample_meta_batches(std::span<const Video> hr_videos, const TaskDistribution& dist,
                                           const TrainingConfig& cfg, std::int64_t step) {
  if (hr_videos.empty()) throw Error("meta_train: no videos");
  std::vector<MetaBatch> out;
  const MetaBatchOptions opts{cfg.meta_train_crop, cfg.meta_test_crop};
  for (int b = 0; b < cfg.meta_task_count; ++b) {
    const std::uint64_t draw = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.meta_task_count) +
                               static_cast<std::uint64_t>(b);
    auto rng = keyed_rng({cfg.seed, draw, 0x3e7aULL});
    std::vector<Video> chosen;
    for (int v = 0; v < cfg.meta_videos_per_task; ++v)
      chosen.push_back(hr_videos[static_cast<size_t>(uniform_int(rng, static_cast<int>(hr_videos.size())))]);
    out.push_back(make_meta_batch(chosen, dist, draw, opts));
  }
  return out;
}

Checkpoint meta_train(std::span<const Video> hr_videos, const TaskDistribution& dist, const TrainingConfig& cfg,
                      Checkpoint state, const TrainHooks& hooks) {
  validate(cfg);
  validate(dist);
  if (state.phase != "meta") {
    state.phase = "meta";
    state.step = 0;
    state.optimizer = OptimizerState{};
  }
  if (!state.optimizer) state.optimizer = OptimizerState{};
  const auto t0 = Clock::now();
  while (state.step < cfg.meta_steps) {
    const std::vector<MetaBatch> batches = sample_meta_batches(hr_videos, dist, cfg, state.step);
    const MetaStepResult r = meta_step(state.model, *state.optimizer, batches, cfg);
    ++state.step;
    if (hooks.log)
      hooks.log(LogRow{state.step, "meta", r.inner_loss_mean, r.test_loss_mean, seconds_since(t0), r.test_psnr_mean});
    const bool last = state.step == cfg.meta_steps;
    if (hooks.checkpoint && (last || (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)))
      hooks.checkpoint(state);
  }
  return state;
}

std::string config_hash(const TrainingConfig& c, const ArchitectureSpec& a) {
  std::ostringstream s;
  s.precision(17);
  s << c.alpha << ' ' << c.alpha_phi << ' ' << c.beta << ' ' << c.gamma << ' ' << c.inner_iters << ' '
    << c.internal_steps << ' ' << c.batch_size << ' ' << c.patch_size << ' ' << c.meta_task_count << ' '
    << c.meta_videos_per_task << ' ' << c.meta_train_crop << ' ' << c.meta_test_crop << ' ' << c.pretrain_steps << ' '
    << c.meta_steps << ' ' << c.pretrain_lr << ' ' << c.pretrain_ssr << ' ' << c.pretrain_tsr << ' ' << c.seed << ' '
    << c.second_order << ' ' << static_cast<int>(c.loss.kind) << ' ' << c.loss.epsilon << ' '
    << static_cast<int>(c.loss.reduction) << ' ' << static_cast<int>(c.inner_reduction) << ' '
    << static_cast<int>(c.internal_reduction) << " | "
    << a.channels << ' ' << a.tsr_features << ' ' << a.tsr_hidden_layers << ' ' << a.ssr_features << ' '
    << a.ssr_hidden_layers << ' ' << to_string(a.activation);
  return fnv1a_hex(s.str());
}

#define ADAVSR_INSTANTIATE(S)                                                                                        \
  template S task_loss<S>(const ModelParams<S>&, std::span<const TrainTriple>, const LossSpec&, ModelParams<S>*);   \
  template S test_loss<S>(const ModelParams<S>&, std::span<const TestTriple>, const LossSpec&, ModelParams<S>*,     \
                          ObjectiveStats*);                                                                          \
  template ModelParams<S> task_loss_hvp<S>(const ModelParams<S>&, const ModelParams<S>&,                            \
                                           std::span<const TrainTriple>, const LossSpec&);                          \
  template ModelParams<S> inner_adapt<S>(const ModelParams<S>&, std::span<const TrainTriple>, InnerRates, int,      \
                                         const LossSpec&, std::vector<ModelParams<S>>*, std::vector<double>*);       \
  template MetaGradient<S> meta_gradient<S>(const ModelParams<S>&, const MetaBatch&, InnerRates, int, bool,         \
                                            const LossSpec&);                                                        \
  template double meta_objective<S>(const ModelParams<S>&, const MetaBatch&, InnerRates, int, const LossSpec&);

ADAVSR_INSTANTIATE(float)
ADAVSR_INSTANTIATE(double)

#undef ADAVSR_INSTANTIATE

}  // namespace adavsr
