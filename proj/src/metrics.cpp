#include "adavsr/metrics.hpp"

#include <cmath>
#include <fstream>

namespace adavsr {

namespace {

void check_same(const Frame& a, const Frame& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels())
    throw Error(std::string(what) + ": frame shape mismatch");
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable valid-mode filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * img[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const Frame& a, const Frame& b) {
  check_same(a, b, "psnr");
  auto pa = a.pixels(), pb = b.pixels();
  double sq = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(pa.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& a, const Frame& b) {
  check_same(a, b, "ssim");
  const int h = a.height(), w = a.width();
  if (h < kWindow || w < kWindow) throw Error("ssim: frame smaller than the 11x11 window");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const auto k = gaussian_window();
  const size_t n = static_cast<size_t>(h) * w;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    auto pa = a.pixels().subspan(c * n, n), pb = b.pixels().subspan(c * n, n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = pa[i];
      y[i] = pb[i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);
    double sum = 0.0;
    for (size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

MetricsReport evaluate(const Video& pred, const Video& gt) {
  if (pred.frame_count() != gt.frame_count() || pred.height() != gt.height() || pred.width() != gt.width() ||
      pred.channels() != gt.channels())
    throw Error("evaluate: prediction and ground truth differ in shape");
  MetricsReport r;
  r.frame_count = pred.frame_count();
  for (int t = 0; t < pred.frame_count(); ++t) {
    const Frame fp = pred.frame(t), fg = gt.frame(t);
    r.per_frame.push_back({t, psnr(fp, fg), ssim(fp, fg)});
  }
  for (const auto& f : r.per_frame) {
    r.mean_psnr_db += f.psnr_db;
    r.mean_ssim += f.ssim;
  }
  r.mean_psnr_db /= r.frame_count;
  r.mean_ssim /= r.frame_count;
  return r;
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write report " + path.string());
  out << "# psnr: peak 1.0 (unit pixel domain), identical frames reported as " << kPsnrCap << " dB\n";
  out << "# ssim: 11x11 gaussian window sigma 1.5, K1 0.01, K2 0.03, L 1.0, valid windows, channel mean\n";
  out << "frame_index,psnr_db,ssim\n";
  char buf[128];
  for (const auto& f : report.per_frame) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.8f\n", f.index, f.psnr_db, f.ssim);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean,%.6f,%.8f\n", report.mean_psnr_db, report.mean_ssim);
  out << buf;
  if (!out) throw Error("failed writing report " + path.string());
}

}  // namespace adavsr
