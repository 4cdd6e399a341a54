#include "adavsr/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adavsr/resample.hpp"
#include "adavsr/rng.hpp"

namespace adavsr {

namespace {

constexpr double kSigmaLo = 0.2;
constexpr double kSigmaHi = 4.0;
constexpr double kPi = 3.14159265358979323846;

std::vector<double> bicubic_down_weights_1d() {
  // Taps at offsets -7.5 .. 7.5 around the sample centre.
  std::vector<double> w(16);
  double sum = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double d = k - 7.5;
    w[k] = 0.25 * keys_cubic(0.25 * d);
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

Video downscale_gaussian(const Video& video, const KernelSpec& spec) {
  const Kernel2D k = make_kernel(spec);
  const int s = k.size;
  const int c = s / 2;
  // Blur followed by averaging the 2x2 integer positions around (4i+1.5, 4j+1.5)
  // is one correlation with this (s+1)x(s+1) kernel anchored at (4i+1, 4j+1).
  const int sc = s + 1;
  std::vector<double> kc(static_cast<size_t>(sc) * sc, 0.0);
  for (int r = 0; r < s; ++r)
    for (int q = 0; q < s; ++q)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) kc[static_cast<size_t>(r + a) * sc + (q + b)] += 0.25 * k.at(r, q);

  const int h = video.height(), w = video.width();
  const int oh = h / kSpatialScale, ow = w / kSpatialScale;
  std::vector<int> row_idx(static_cast<size_t>(oh) * sc), col_idx(static_cast<size_t>(ow) * sc);
  for (int i = 0; i < oh; ++i)
    for (int r = 0; r < sc; ++r) row_idx[i * sc + r] = mirror_index(4 * i + 1 + r - c, h, false);
  for (int j = 0; j < ow; ++j)
    for (int q = 0; q < sc; ++q) col_idx[j * sc + q] = mirror_index(4 * j + 1 + q - c, w, false);

  std::vector<float> out(static_cast<size_t>(video.frame_count()) * video.channels() * oh * ow);
  size_t o = 0;
  for (int t = 0; t < video.frame_count(); ++t) {
    auto frame = video.frame_samples(t);
    for (int ch = 0; ch < video.channels(); ++ch) {
      const float* plane = frame.data() + static_cast<size_t>(ch) * h * w;
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (int r = 0; r < sc; ++r) {
            const float* row = plane + static_cast<size_t>(row_idx[i * sc + r]) * w;
            const double* krow = kc.data() + static_cast<size_t>(r) * sc;
            for (int q = 0; q < sc; ++q) acc += krow[q] * row[col_idx[j * sc + q]];
          }
          out[o++] = static_cast<float>(acc);
        }
      }
    }
  }
  return Video::clamped(video.frame_count(), oh, ow, video.channels(), std::move(out));
}

}  // namespace

std::string to_string(TemporalOp op) { return op == TemporalOp::alternate ? "alternate" : "average3"; }
std::string to_string(KernelKind kind) { return kind == KernelKind::bicubic ? "bicubic" : "aniso_gaussian"; }

int required_support(double sigma1, double sigma2, int minimum) {
  int s = 4 * static_cast<int>(std::ceil(std::max(sigma1, sigma2))) + 1;
  s = std::max(s, minimum);
  return s % 2 == 0 ? s + 1 : s;
}

void validate(const KernelSpec& spec) {
  if (spec.kind == KernelKind::bicubic) return;
  if (!(spec.sigma1 >= kSigmaLo && spec.sigma1 <= kSigmaHi && spec.sigma2 >= kSigmaLo && spec.sigma2 <= kSigmaHi))
    throw Error("kernel sigma outside [0.2, 4.0]");
  if (!(spec.angle >= 0.0 && spec.angle < kPi)) throw Error("kernel angle outside [0, pi)");
  if (spec.support <= 0 || spec.support % 2 == 0) throw Error("kernel support must be odd and positive");
  if (spec.support < 4 * static_cast<int>(std::ceil(std::max(spec.sigma1, spec.sigma2))) + 1)
    throw Error("kernel support too small for its sigmas");
}

void validate(const TaskDistribution& dist) {
  if (!(dist.sigma_min >= kSigmaLo && dist.sigma_max <= kSigmaHi && dist.sigma_min <= dist.sigma_max))
    throw Error("task distribution sigma range must lie in [0.2, 4.0]");
  if (!(dist.angle_min >= 0.0 && dist.angle_max <= kPi && dist.angle_min <= dist.angle_max))
    throw Error("task distribution angle range must lie in [0, pi]");
  if (!(dist.bicubic_weight >= 0.0 && dist.bicubic_weight <= 1.0)) throw Error("bicubic_weight outside [0, 1]");
  if (!(dist.alternate_weight >= 0.0 && dist.alternate_weight <= 1.0)) throw Error("alternate_weight outside [0, 1]");
  if (dist.min_support <= 0) throw Error("min_support must be positive");
}

Kernel2D make_kernel(const KernelSpec& spec) {
  validate(spec);
  Kernel2D k;
  if (spec.kind == KernelKind::bicubic) {
    const auto w = bicubic_down_weights_1d();
    k.size = 16;
    k.weights.resize(256);
    for (int r = 0; r < 16; ++r)
      for (int q = 0; q < 16; ++q) k.weights[r * 16 + q] = w[r] * w[q];
    return k;
  }
  k.size = spec.support;
  k.weights.resize(static_cast<size_t>(k.size) * k.size);
  const double c = (k.size - 1) / 2.0;
  const double cs = std::cos(spec.angle), sn = std::sin(spec.angle);
  const double inv1 = 1.0 / (spec.sigma1 * spec.sigma1), inv2 = 1.0 / (spec.sigma2 * spec.sigma2);
  double sum = 0.0;
  for (int r = 0; r < k.size; ++r) {
    for (int q = 0; q < k.size; ++q) {
      const double dx = q - c, dy = r - c;
      const double u = cs * dx + sn * dy;
      const double v = -sn * dx + cs * dy;
      const double val = std::exp(-0.5 * (u * u * inv1 + v * v * inv2));
      k.weights[static_cast<size_t>(r) * k.size + q] = val;
      sum += val;
    }
  }
  for (double& v : k.weights) v /= sum;
  return k;
}

Video spatial_downscale(const Video& video, const KernelSpec& kernel) {
  if (video.height() % kSpatialScale != 0 || video.width() % kSpatialScale != 0)
    throw Error("spatial_downscale: height and width must be divisible by 4, got " + std::to_string(video.height()) +
                "x" + std::to_string(video.width()));
  if (kernel.kind == KernelKind::aniso_gaussian) return downscale_gaussian(video, kernel);
  return bicubic_resize(video, video.height() / kSpatialScale, video.width() / kSpatialScale);
}

Video spatial_downscale(const Video& video, const DegradationTask& task) {
  if (task.spatial_scale != kSpatialScale) throw Error("only x4 spatial scale is supported");
  return spatial_downscale(video, task.kernel);
}

Video bicubic_resize(const Video& video, int height, int width) {
  const ResampleTaps ty = bicubic_taps(video.height(), height);
  const ResampleTaps tx = bicubic_taps(video.width(), width);
  const size_t in_plane = static_cast<size_t>(video.height()) * video.width();
  const size_t out_plane = static_cast<size_t>(height) * width;
  std::vector<double> in(in_plane), res(out_plane);
  std::vector<float> out(static_cast<size_t>(video.frame_count()) * video.channels() * out_plane);
  for (int t = 0; t < video.frame_count(); ++t) {
    auto frame = video.frame_samples(t);
    for (int c = 0; c < video.channels(); ++c) {
      std::copy_n(frame.begin() + static_cast<ptrdiff_t>(c * in_plane), in_plane, in.begin());
      resample_plane(in.data(), video.height(), video.width(), ty, tx, res.data());
      float* dst = out.data() + (static_cast<size_t>(t) * video.channels() + c) * out_plane;
      for (size_t p = 0; p < out_plane; ++p) dst[p] = static_cast<float>(res[p]);
    }
  }
  return Video::clamped(video.frame_count(), height, width, video.channels(), std::move(out));
}

Video temporal_downscale(const Video& video, TemporalOp op) {
  const int m = video.frame_count();
  if (m < 3) throw Error("temporal_downscale: need at least 3 frames, got " + std::to_string(m));
  const int out_m = (m + 1) / 2;
  if (op == TemporalOp::alternate) return video.select_frames(even_frame_indices(m));

  const size_t fs = video.frame_size();
  std::vector<float> out(static_cast<size_t>(out_m) * fs);
  for (int k = 0; k < out_m; ++k) {
    const int lo = std::max(2 * k - 1, 0), hi = std::min(2 * k + 1, m - 1);
    const double inv = 1.0 / (hi - lo + 1);
    float* dst = out.data() + static_cast<size_t>(k) * fs;
    for (size_t p = 0; p < fs; ++p) {
      double acc = 0.0;
      for (int t = lo; t <= hi; ++t) acc += video.frame_samples(t)[p];
      dst[p] = static_cast<float>(acc * inv);
    }
  }
  return Video::clamped(out_m, video.height(), video.width(), video.channels(), std::move(out));
}

Video temporal_profile(const Video& video) {
  const int m = video.frame_count();
  if (m < 2) throw Error("temporal_profile: need at least 2 frames");
  const size_t fs = video.frame_size();
  std::vector<float> out(static_cast<size_t>(2 * m - 1) * fs);
  for (int t = 0; t < m; ++t) {
    auto src = video.frame_samples(t);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<ptrdiff_t>(2 * t * fs));
  }
  for (int t = 0; t + 1 < m; ++t) {
    auto a = video.frame_samples(t), b = video.frame_samples(t + 1);
    float* dst = out.data() + static_cast<size_t>(2 * t + 1) * fs;
    for (size_t p = 0; p < fs; ++p) {
      const double l = a[p], r = b[p];
      const double before = t > 0 ? video.frame_samples(t - 1)[p] : 2.0 * l - r;
      const double after = t + 2 < m ? video.frame_samples(t + 2)[p] : 2.0 * r - l;
      dst[p] = static_cast<float>(cubic_midpoint(before, l, r, after));
    }
  }
  return Video::clamped(2 * m - 1, video.height(), video.width(), video.channels(), std::move(out));
}

std::vector<int> even_frame_indices(int frame_count) {
  std::vector<int> idx;
  for (int t = 0; t < frame_count; t += 2) idx.push_back(t);
  return idx;
}

namespace {

DegradationTask draw_task(const TaskDistribution& dist, std::uint64_t index, std::uint64_t stream) {
  auto rng = keyed_rng({dist.seed, index, stream, 0x7a5cULL});
  DegradationTask task;
  const bool bicubic = uniform01(rng) < dist.bicubic_weight;
  const double s1 = uniform(rng, dist.sigma_min, dist.sigma_max);
  const double s2 = uniform(rng, dist.sigma_min, dist.sigma_max);
  double angle = uniform(rng, dist.angle_min, dist.angle_max);
  if (angle >= kPi) angle = 0.0;
  const bool alternate = uniform01(rng) < dist.alternate_weight;
  if (bicubic) {
    task.kernel = KernelSpec{KernelKind::bicubic, 1.0, 1.0, 0.0, 13};
  } else {
    task.kernel = KernelSpec{KernelKind::aniso_gaussian, s1, s2, angle, required_support(s1, s2, dist.min_support)};
  }
  task.temporal = alternate ? TemporalOp::alternate : TemporalOp::average3;
  return task;
}

Video crop_square(const Video& v, int size, std::mt19937_64& rng) {
  if (size <= 0 || (size == v.height() && size == v.width())) return v;
  if (size > v.height() || size > v.width()) throw Error("crop larger than video");
  // Keep crops on the x4 grid so every degradation sees the same phase.
  const int top = uniform_int(rng, (v.height() - size) / kSpatialScale + 1) * kSpatialScale;
  const int left = uniform_int(rng, (v.width() - size) / kSpatialScale + 1) * kSpatialScale;
  return extract_patch(v, top, left, size);
}

}  // namespace

DegradationTask sample_task(const TaskDistribution& dist, std::uint64_t index) {
  validate(dist);
  return draw_task(dist, index, 0);
}

MetaBatch make_meta_batch(std::span<const Video> hr_videos, const TaskDistribution& dist, std::uint64_t draw_index,
                          const MetaBatchOptions& options) {
  validate(dist);
  if (hr_videos.empty()) throw Error("make_meta_batch: no videos");
  MetaBatch batch;
  batch.task_train = draw_task(dist, draw_index, 1);
  constexpr int kMaxAttempts = 1000;
  int attempt = 0;
  do {
    batch.task_test = draw_task(dist, draw_index, 2 + static_cast<std::uint64_t>(attempt));
  } while (batch.task_test == batch.task_train && ++attempt < kMaxAttempts);
  if (batch.task_test == batch.task_train) throw Error("task distribution cannot produce two distinct tasks");

  auto rng = keyed_rng({dist.seed, draw_index, 0xc409ULL});
  for (const Video& hr : hr_videos) {
    const Video src = crop_square(hr, options.train_crop, rng);
    if (src.height() % 16 != 0 || src.width() % 16 != 0 || src.frame_count() < 5)
      throw Error("make_meta_batch: D_tr sources need H, W divisible by 16 and at least 5 frames");
    Video lr = temporal_downscale(spatial_downscale(src, batch.task_train), batch.task_train.temporal);
    Video s = spatial_downscale(lr, batch.task_train);
    Video ts = temporal_downscale(s, batch.task_train.temporal);
    batch.train.push_back(TrainTriple{std::move(lr), std::move(s), std::move(ts)});

    const Video hr_te = crop_square(hr, options.test_crop, rng);
    Video lr_hfr = spatial_downscale(hr_te, batch.task_test);
    Video lr_te = temporal_downscale(lr_hfr, batch.task_test.temporal);
    batch.test.push_back(TestTriple{hr_te, std::move(lr_hfr), std::move(lr_te)});
  }
  return batch;
}

}  // namespace adavsr
