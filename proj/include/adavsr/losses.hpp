#pragma once

#include <span>
#include <vector>

#include "adavsr/dual.hpp"
#include "adavsr/models.hpp"
#include "adavsr/video.hpp"

namespace adavsr {

enum class LossKind {
  l1,
  /// sqrt(r^2 + eps^2) - eps: a smooth l1 used by gradient checks.
  charbonnier,
};

enum class Reduction {
  /// Average over every compared sample (frames x channels x pixels).
  mean,
  /// The plain l1 norm: sum over every compared sample.
  sum,
};

struct LossSpec {
  LossKind kind = LossKind::l1;
  double epsilon = 1e-3;
  Reduction reduction = Reduction::mean;
};

/// One supervised reconstruction: `input` goes through F (and S when
/// `final_target` is set). `mid_target` supervises F's output, `final_target`
/// supervises S(F(input)). Targets longer than the 2m-1 reconstructed frames
/// are compared on their leading 2m-1 frames.
struct PipelineSample {
  const Video* input = nullptr;
  const Video* mid_target = nullptr;
  const Video* final_target = nullptr;
};

/// Side statistics gathered while evaluating an objective (value part only).
struct ObjectiveStats {
  double final_squared_error = 0.0;
  size_t final_count = 0;

  /// PSNR of the final-stage predictions against their targets.
  double final_psnr() const;
};

/// Mean over samples of the pipeline losses. Gradients (when requested) are
/// accumulated into `grad`, which must be zero-initialised with the layout of
/// `params`.
template <class T>
T pipeline_objective(const ModelParams<T>& params, std::span<const PipelineSample> samples, const LossSpec& loss,
                     ModelParams<T>* grad, ObjectiveStats* stats = nullptr);

/// Mean over pairs of ||S_phi(lr) - hr|| (SSR only).
template <class T>
T ssr_objective(const Params<T>& phi, std::span<const Video> inputs, std::span<const Video> targets,
                const LossSpec& loss, Params<T>* grad, ObjectiveStats* stats = nullptr);

template <class T>
Params<T> zeros_like(const Params<T>& p) {
  return Params<T>{p.net, std::vector<T>(p.values.size(), T(0))};
}

template <class T>
ModelParams<T> zeros_like(const ModelParams<T>& m) {
  return {zeros_like(m.tsr), zeros_like(m.ssr)};
}

}  // namespace adavsr
