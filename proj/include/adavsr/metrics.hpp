#pragma once

#include <filesystem>
#include <vector>

#include "adavsr/video.hpp"

namespace adavsr {

/// Reported in place of +inf when two frames are identical.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE), peak 1.0, capped at kPsnrCap.
double psnr(const Frame& a, const Frame& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 1, mean over valid window positions, averaged over
/// channels.
double ssim(const Frame& a, const Frame& b);

struct FrameMetrics {
  int index = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<FrameMetrics> per_frame;
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
  int frame_count = 0;
};

MetricsReport evaluate(const Video& pred, const Video& gt);

/// `frame_index,psnr_db,ssim` rows plus a `mean,...` row, preceded by
/// `#` comments stating the conventions.
void write_report_csv(const MetricsReport& report, const std::filesystem::path& path);

/// Renders loss and PSNR curves of a training/adaptation log as
/// `loss.png` and `psnr.png` in `out_dir`.
void emit_plots(const std::filesystem::path& log_csv, const std::filesystem::path& out_dir);

/// Parsed log columns, as used by emit_plots.
struct LogSeries {
  std::vector<double> step;
  std::vector<double> loss_inner;
  std::vector<double> loss_test;
  std::vector<double> psnr_db;  // empty when the log has no psnr_db column
};

LogSeries read_log_csv(const std::filesystem::path& log_csv);

}  // namespace adavsr
