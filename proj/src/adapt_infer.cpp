#include "adavsr/adapt_infer.hpp"

#include <cmath>

#include "adavsr/logging.hpp"

namespace adavsr {

KernelSpec KernelProvider::kernel() const {
  if (mode == Mode::bicubic_fallback) return KernelSpec{KernelKind::bicubic};
  if (!oracle_task) throw Error("kernel provider: oracle mode requires a task");
  return oracle_task->kernel;
}

InternalPair build_internal_pair(const Video& lr, const KernelProvider& provider) {
  if (lr.height() % 4 != 0 || lr.width() % 4 != 0 || lr.height() < 4 || lr.width() < 4)
    throw Error("build_internal_pair: V_LR height and width must be positive multiples of 4");
  if (lr.frame_count() < 3) throw Error("build_internal_pair: V_LR needs at least 3 frames");
  const KernelSpec kernel = provider.kernel();
  Video input = temporal_downscale(spatial_downscale(lr, kernel), TemporalOp::alternate);
  const int keep = 2 * input.frame_count() - 1;
  Video target = keep == lr.frame_count() ? lr : lr.head(keep);
  return {std::move(input), std::move(target)};
}

namespace {

double internal_objective(const Model& params, const InternalPair& pair, const LossSpec& loss, Model* grad,
                          ObjectiveStats* stats = nullptr) {
  if (pair.target.frame_count() != 2 * pair.input.frame_count() - 1 ||
      pair.target.height() != 4 * pair.input.height() || pair.target.width() != 4 * pair.input.width())
    throw Error("internal_loss: pair shape mismatch");
  const PipelineSample s{&pair.input, nullptr, &pair.target};
  return pipeline_objective<float>(params, std::span<const PipelineSample>(&s, 1), loss, grad, stats);
}

}  // namespace

double internal_loss(const Model& params, const InternalPair& pair, const LossSpec& loss) {
  LossSpec mean = loss;
  mean.reduction = Reduction::mean;
  return internal_objective(params, pair, mean, nullptr);
}

AdaptResult internal_adapt(const Model& params, const InternalPair& pair, double gamma, int steps,
                           const LossSpec& loss, Reduction reduction) {
  if (!(gamma >= 0.0)) throw Error("internal_adapt: gamma must be >= 0");
  if (steps < 0) throw Error("internal_adapt: steps must be >= 0");
  LossSpec descent = loss;
  descent.reduction = reduction;
  const double scale = reduction == Reduction::sum
                           ? 1.0 / static_cast<double>(pair.target.frame_size()) /
                                 static_cast<double>(2 * pair.input.frame_count() - 1)
                           : 1.0;
  AdaptResult r{params, {}, {}, 0, false};
  Model previous = params;
  for (int k = 0; k < steps; ++k) {
    Model g = zeros_like(r.params);
    ObjectiveStats stats;
    const double value = internal_objective(r.params, pair, descent, &g, &stats);
    ++r.gradient_updates;
    bool finite = std::isfinite(value);
    for (const ParamSet* p : {&g.tsr, &g.ssr})
      for (float x : p->values) finite = finite && std::isfinite(x);
    if (!finite) {
      log_warn("internal_adapt: non-finite loss at step {}, keeping last finite parameters", k);
      // The current parameters produced the bad loss; step back to the
      // last ones whose loss was finite.
      r.params = std::move(previous);
      r.diverged = true;
      return r;
    }
    r.losses.push_back(value * scale);
    r.psnr_db.push_back(stats.final_psnr());
    previous = r.params;
    for (size_t i = 0; i < g.tsr.values.size(); ++i)
      r.params.tsr.values[i] = static_cast<float>(r.params.tsr.values[i] - gamma * g.tsr.values[i]);
    for (size_t i = 0; i < g.ssr.values.size(); ++i)
      r.params.ssr.values[i] = static_cast<float>(r.params.ssr.values[i] - gamma * g.ssr.values[i]);
  }
  LossSpec mean = loss;
  mean.reduction = Reduction::mean;
  ObjectiveStats stats;
  r.losses.push_back(internal_objective(r.params, pair, mean, nullptr, &stats));
  r.psnr_db.push_back(stats.final_psnr());
  return r;
}

Video infer(const Model& params, const Video& lr) { return forward_pipeline(params.tsr, params.ssr, lr); }

}  // namespace adavsr
