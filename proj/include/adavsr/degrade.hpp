#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adavsr/video.hpp"

namespace adavsr {

enum class KernelKind { bicubic, aniso_gaussian };
enum class TemporalOp { alternate, average3 };

inline constexpr int kSpatialScale = 4;
inline constexpr int kTemporalScale = 2;

/// Spatial blur kernel. Sigmas are eigen standard deviations (pixels) of the
/// Gaussian covariance; `angle` rotates the first eigen axis away from +x.
struct KernelSpec {
  KernelKind kind = KernelKind::bicubic;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double angle = 0.0;
  int support = 13;

  bool operator==(const KernelSpec&) const = default;
};

/// Smallest odd support that keeps a Gaussian with the given sigmas inside
/// the kernel window (4 * ceil(max sigma) + 1), never below `minimum`.
int required_support(double sigma1, double sigma2, int minimum = 13);

/// Throws Error when the spec breaks the kernel invariants.
void validate(const KernelSpec& spec);

struct DegradationTask {
  KernelSpec kernel;
  TemporalOp temporal = TemporalOp::alternate;
  int spatial_scale = kSpatialScale;
  int temporal_scale = kTemporalScale;

  bool operator==(const DegradationTask&) const = default;
};

/// The task distribution p(T). Every draw is a pure function of
/// (seed, draw index).
struct TaskDistribution {
  std::uint64_t seed = 0;
  double sigma_min = 0.2;
  double sigma_max = 4.0;
  double angle_min = 0.0;
  double angle_max = 3.14159265358979323846;
  int min_support = 13;
  /// Probability of a bicubic task instead of an anisotropic Gaussian.
  double bicubic_weight = 0.0;
  /// Probability of TemporalOp::alternate.
  double alternate_weight = 0.5;
};

void validate(const TaskDistribution& dist);

/// Dense 2-D kernel, row-major (row = y).
struct Kernel2D {
  int size = 0;
  std::vector<double> weights;
  double at(int row, int col) const { return weights[static_cast<size_t>(row) * size + col]; }
};

/// Anisotropic Gaussian: support x support samples centred on the middle
/// tap. Bicubic: the effective 16 x 16 antialiased Keys kernel used by the
/// x4 bicubic downscale, centred between taps 7 and 8.
Kernel2D make_kernel(const KernelSpec& spec);

/// f_s: blur + x4 subsampling. Sample (i, j) is centred on input position
/// (4i + 1.5, 4j + 1.5). Anisotropic kernels use reflect padding
/// (edge not repeated); the bicubic path is a separable antialiased Keys
/// resize. Output is clamped to [0, 1].
Video spatial_downscale(const Video& video, const KernelSpec& kernel);
Video spatial_downscale(const Video& video, const DegradationTask& task);

/// Bicubic resize of every frame to an arbitrary size (clamped to [0, 1]).
Video bicubic_resize(const Video& video, int height, int width);

/// f_t: `alternate` keeps even frames; `average3` averages the window
/// {2k-1, 2k, 2k+1} restricted to valid frames. Both return ceil(M/2) frames.
Video temporal_downscale(const Video& video, TemporalOp op);

/// f_r: 2M-1 frames; even outputs are the inputs, odd outputs are per-pixel
/// cubic midpoints. Missing stencil samples at the clip ends are linearly
/// extrapolated so linear motion in time is reproduced exactly.
Video temporal_profile(const Video& video);

DegradationTask sample_task(const TaskDistribution& dist, std::uint64_t index);

/// Alternate-frame selection used when a video has to be shortened to a
/// length compatible with 2m-1 reconstruction.
std::vector<int> even_frame_indices(int frame_count);

struct TrainTriple {
  Video lr;  // V_LR
  Video s;   // V_s = f_s(V_LR)
  Video ts;  // V_ts = f_t(V_s)
};

struct TestTriple {
  Video hr;      // V_HR
  Video lr_hfr;  // ~V_LR = f_s(V_HR)
  Video lr;      // V_LR = f_t(~V_LR)
};

struct MetaBatch {
  std::vector<TrainTriple> train;
  std::vector<TestTriple> test;
  DegradationTask task_train;
  DegradationTask task_test;
};

struct MetaBatchOptions {
  /// Square HR crop used for D_tr sources; 0 keeps the full frame.
  int train_crop = 0;
  /// Square HR crop used for D_te; 0 keeps the full frame.
  int test_crop = 0;
};

/// Builds D_tr with T_i (HR -> V_LR -> V_s -> V_ts) and D_te with T_j != T_i
/// (HR -> ~V_LR -> V_LR). Crop positions and both tasks are pure functions of
/// (dist.seed, draw_index).
MetaBatch make_meta_batch(std::span<const Video> hr_videos, const TaskDistribution& dist, std::uint64_t draw_index,
                          const MetaBatchOptions& options = {});

/// One-line `key=value` task serialization for experiment logs.
std::string format_task(const DegradationTask& task);
DegradationTask parse_task(std::string_view line);

std::string to_string(TemporalOp op);
std::string to_string(KernelKind kind);

}  // namespace adavsr
