#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adavsr/checkpoint.hpp"
#include "adavsr/degrade.hpp"
#include "adavsr/losses.hpp"
#include "adavsr/models.hpp"

namespace adavsr {

/// Scalar hyperparameters for external and internal learning.
struct TrainingConfig {
  double alpha = 0.01;      // task-specific (inner) rate for theta
  double alpha_phi = 0.01;  // task-specific (inner) rate for phi
  double beta = 1e-4;       // meta (outer) Adam rate
  double gamma = 1e-4;      // internal-learning rate
  int inner_iters = 10;     // n_i
  int internal_steps = 10;  // n
  int batch_size = 32;      // pretraining batch
  int patch_size = 64;      // pretraining HR patch
  int meta_task_count = 4;  // tasks per meta step
  int meta_videos_per_task = 1;
  int meta_train_crop = 0;  // D_tr HR crop (0 = full frame)
  int meta_test_crop = 64;  // D_te HR crop
  std::int64_t pretrain_steps = 0;
  std::int64_t meta_steps = 0;
  double pretrain_lr = 1e-3;
  bool pretrain_ssr = true;
  bool pretrain_tsr = true;
  std::uint64_t seed = 0;
  bool second_order = true;
  std::int64_t checkpoint_every = 0;
  int workers = 1;
  LossSpec loss;
  /// Reductions of the losses descended by the inner (task-specific) and
  /// internal-learning steps. Internal-learning traces report means.
  Reduction inner_reduction = Reduction::mean;
  Reduction internal_reduction = Reduction::mean;
};

void validate(const TrainingConfig& cfg);

/// Raised when a loss or gradient becomes non-finite.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

struct SsrPair {
  Video lr;  // ~V_LR (bicubic x4 downscale of hr)
  Video hr;  // V_HR
};

struct TsrPair {
  Video lfr;  // alternate frames of hr
  Video hr;   // V_HR
};

/// One sampled pretraining batch from D_s and D_t.
struct PretrainDatasets {
  std::vector<SsrPair> d_s;
  std::vector<TsrPair> d_t;
};

/// Random HR patches (on the x4 grid) turned into D_s and D_t pairs. Pure
/// function of (seed, step).
PretrainDatasets make_pretrain_batch(std::span<const Video> hr_videos, int batch_size, int patch_size,
                                     std::uint64_t seed, std::int64_t step);

double loss_ssr_pretrain(const ParamSet& phi, std::span<const SsrPair> batch, const LossSpec& loss = {});
double loss_tsr_pretrain(const ParamSet& theta, std::span<const TsrPair> batch, const LossSpec& loss = {});

/// Separate inner rates for theta and phi, and the reduction of the loss
/// the inner steps descend.
struct InnerRates {
  double theta = 0.01;
  double phi = 0.01;
  Reduction reduction = Reduction::mean;
};

/// Mean over D_tr of l(F(V_ts), V_s) + l(S(F(V_ts)), V_LR).
template <class S>
S task_loss(const ModelParams<S>& params, std::span<const TrainTriple> train, const LossSpec& loss,
            ModelParams<S>* grad = nullptr);

/// Mean over D_te of l(F(V_LR), ~V_LR) + l(S(F(V_LR)), V_HR).
template <class S>
S test_loss(const ModelParams<S>& params, std::span<const TestTriple> test, const LossSpec& loss,
            ModelParams<S>* grad = nullptr, ObjectiveStats* stats = nullptr);

/// Hessian of task_loss at `params` applied to `direction`, exact up to
/// rounding (forward-over-reverse).
template <class S>
ModelParams<S> task_loss_hvp(const ModelParams<S>& params, const ModelParams<S>& direction,
                             std::span<const TrainTriple> train, const LossSpec& loss);

/// n_i plain gradient-descent steps on task_loss. `trajectory`, when given,
/// receives the n_i parameter sets the gradients were taken at; `losses`
/// receives the n_i loss values.
template <class S>
ModelParams<S> inner_adapt(const ModelParams<S>& params, std::span<const TrainTriple> train, InnerRates rates,
                           int inner_iters, const LossSpec& loss, std::vector<ModelParams<S>>* trajectory = nullptr,
                           std::vector<double>* losses = nullptr);

template <class S>
struct MetaGradient {
  ModelParams<S> grad;
  double inner_loss_mean = 0.0;
  double test_loss = 0.0;
  double test_psnr = 0.0;
};

/// Gradient of L_te(inner_adapt(params)) with respect to params. With
/// `second_order` the inner loop is differentiated exactly; otherwise the
/// inner Jacobian is taken as identity.
template <class S>
MetaGradient<S> meta_gradient(const ModelParams<S>& params, const MetaBatch& batch, InnerRates rates,
                              int inner_iters, bool second_order, const LossSpec& loss);

/// L_te(inner_adapt(params)): the bilevel objective for one meta-batch.
template <class S>
double meta_objective(const ModelParams<S>& params, const MetaBatch& batch, InnerRates rates, int inner_iters,
                      const LossSpec& loss);

struct MetaStepResult {
  double inner_loss_mean = 0.0;
  double test_loss_mean = 0.0;
  double test_psnr_mean = 0.0;
};

/// One outer update: sums the per-task meta-gradients (tasks may run on
/// `cfg.workers` threads; the reduction order is fixed) and takes one Adam
/// step with rate beta on theta and phi.
MetaStepResult meta_step(Model& params, OptimizerState& optimizer, std::span<const MetaBatch> batches,
                         const TrainingConfig& cfg);

/// One row of the training log.
struct LogRow {
  std::int64_t step = 0;
  std::string phase;
  double loss_inner_mean = 0.0;
  double loss_test_mean = 0.0;
  double wall_seconds = 0.0;
  double psnr_db = 0.0;
};

/// Append-only CSV: `step,phase,loss_inner_mean,loss_test_mean,wall_seconds,psnr_db`.
class CsvLog {
 public:
  explicit CsvLog(const std::filesystem::path& path);
  void write(const LogRow& row);

 private:
  std::ofstream out_;
};

inline constexpr const char* kLogHeader = "step,phase,loss_inner_mean,loss_test_mean,wall_seconds,psnr_db";

struct TrainHooks {
  std::function<void(const LogRow&)> log;
  /// Called every `cfg.checkpoint_every` steps and after the last step.
  std::function<void(const Checkpoint&)> checkpoint;
};

/// Large-scale training: per step one Adam update of phi on a D_s batch and
/// one of theta on a D_t batch, until `cfg.pretrain_steps`. Resumes from
/// `state.step` when `state.phase == "pretrain"`.
Checkpoint pretrain(std::span<const Video> hr_videos, const TrainingConfig& cfg, Checkpoint state,
                    const TrainHooks& hooks = {});

/// Meta-transfer learning until `cfg.meta_steps`. Optimizer state is reset
/// unless `state.phase == "meta"` (resume).
Checkpoint meta_train(std::span<const Video> hr_videos, const TaskDistribution& dist, const TrainingConfig& cfg,
                      Checkpoint state, const TrainHooks& hooks = {});

/// The meta-batches used at a given meta step (pure function of seed, step).
std::vector<MetaBatch> sample_meta_batches(std::span<const Video> hr_videos, const TaskDistribution& dist,
                                           const TrainingConfig& cfg, std::int64_t step);

/// Hash of the training-relevant configuration, for checkpoint manifests.
std::string config_hash(const TrainingConfig& cfg, const ArchitectureSpec& arch);

}  // namespace adavsr
