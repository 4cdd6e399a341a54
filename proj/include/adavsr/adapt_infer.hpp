#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adavsr/degrade.hpp"
#include "adavsr/losses.hpp"
#include "adavsr/models.hpp"

namespace adavsr {

/// Source of the downscaling kernel used to build the internal pair. Kernel
/// estimation plugs in here; `oracle` uses the true task, `bicubic_fallback`
/// assumes a bicubic kernel.
struct KernelProvider {
  enum class Mode { oracle, bicubic_fallback };
  Mode mode = Mode::bicubic_fallback;
  std::optional<DegradationTask> oracle_task;

  static KernelProvider oracle(const DegradationTask& task) { return {Mode::oracle, task}; }
  static KernelProvider bicubic() { return {Mode::bicubic_fallback, std::nullopt}; }

  /// Throws Error when oracle mode lacks a task.
  KernelSpec kernel() const;
};

/// (V_I, V_LR): V_I = alternate(f_s(V_LR)); target trimmed to 2|V_I| - 1.
struct InternalPair {
  Video input;
  Video target;
};

/// Requires H, W divisible by 4 and at least 3 frames (V_I needs two).
InternalPair build_internal_pair(const Video& lr, const KernelProvider& provider);

/// Mean l1 of S(F(V_I)) - V_LR.
double internal_loss(const Model& params, const InternalPair& pair, const LossSpec& loss = {});

struct AdaptResult {
  Model params;
  /// Mean internal loss before each update, then once more at the result.
  std::vector<double> losses;
  /// PSNR of S(F(V_I)) against V_LR at the same points as `losses`.
  std::vector<double> psnr_db;
  /// Forward-backward evaluations performed (exactly n unless diverged).
  int gradient_updates = 0;
  bool diverged = false;
};

/// n plain gradient steps of rate gamma on the internal objective. The
/// descent direction uses `reduction` (the reported losses are always
/// means). A non-finite loss stops early and returns the last finite
/// parameters with `diverged` set.
AdaptResult internal_adapt(const Model& params, const InternalPair& pair, double gamma, int steps,
                           const LossSpec& loss = {}, Reduction reduction = Reduction::mean);

/// V_HR estimate: S(F(V_LR)), (2M-1) x 4H x 4W, clamped.
Video infer(const Model& params, const Video& lr);

}  // namespace adavsr
