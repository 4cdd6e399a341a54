#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ssim_reference.hpp"

#include "adavsr/metrics.hpp"
#include "adavsr/png_io.hpp"

using namespace adavsr;
namespace fs = std::filesystem;

namespace {

Frame random_frame(std::mt19937_64& rng, int h, int w, int c = 1) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> p(static_cast<size_t>(h) * w * c);
  for (float& x : p) x = u(rng);
  return Frame(h, w, c, p);
}

Frame offset_frame(const Frame& f, float d) {
  std::vector<float> p(f.pixels().begin(), f.pixels().end());
  for (float& x : p) x += d;
  return Frame(f.height(), f.width(), f.channels(), p);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adavsr_test_metrics_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_log(const fs::path& p, int rows, bool with_psnr = true) {
  std::ofstream out(p);
  out << "step,phase,loss_inner_mean,loss_test_mean,wall_seconds" << (with_psnr ? ",psnr_db" : "") << "\n";
  for (int i = 1; i <= rows; ++i) {
    out << i << ",meta," << 1.0 / i << "," << 2.0 / i << "," << 0.1 * i;
    if (with_psnr) out << "," << 20 + 0.01 * i;
    out << "\n";
  }
}

}  // namespace

TEST_CASE("psnr closed forms") {
  const Frame a = Frame::filled(8, 8, 1, 0.2f);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(a, Frame::filled(8, 8, 1, 0.7f)) == doctest::Approx(6.0206).epsilon(1e-5));
  CHECK(psnr(a, Frame::filled(8, 8, 1, 0.3f)) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(a, Frame::filled(8, 9, 1, 0.3f)), Error);
}

TEST_CASE("psnr is symmetric and decreases with the offset") {
  std::mt19937_64 rng(61);
  const Frame a = random_frame(rng, 9, 7, 3);
  const Frame b = random_frame(rng, 9, 7, 3);
  CHECK(psnr(a, b) == psnr(b, a));
  const Frame base = Frame::filled(6, 6, 1, 0.25f);
  double prev = kPsnrCap + 1;
  for (int i = 1; i <= 50; ++i) {
    const double v = psnr(base, offset_frame(base, 0.01f * static_cast<float>(i)));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim identities") {
  std::mt19937_64 rng(62);
  for (int i = 0; i < 5; ++i) {
    const Frame a = random_frame(rng, 16 + i, 20, i % 2 ? 3 : 1);
    const Frame b = random_frame(rng, 16 + i, 20, i % 2 ? 3 : 1);
    CHECK(std::abs(ssim(a, a) - 1.0) <= 1e-9);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-9);
  }
  std::normal_distribution<double> n(0.5, 0.1);
  std::vector<float> g, inv;
  for (int i = 0; i < 32 * 32; ++i) {
    const float v = static_cast<float>(std::clamp(n(rng), 0.0, 1.0));
    g.push_back(v);
    inv.push_back(1.0f - v);
  }
  CHECK(ssim(Frame(32, 32, 1, g), Frame(32, 32, 1, inv)) < 0.5);
  CHECK_THROWS_AS(ssim(Frame::filled(10, 20, 1, 0.1f), Frame::filled(10, 20, 1, 0.1f)), Error);
}

TEST_CASE("ssim matches the frozen reference values") {
  for (const oracle::SsimFixture& f : oracle::kSsimReference) {
    const auto [a, b] = oracle::ssim_pair(f.k, f.h, f.w);
    CHECK(std::abs(ssim(a, b) - f.expected) <= 1e-6);
  }
  CHECK(std::abs(ssim(Frame::filled(16, 16, 1, 0.4f), Frame::filled(16, 16, 1, 0.5f)) - oracle::kConstantPairReference) <=
        1e-6);
}

TEST_CASE("ssim matches the direct-window oracle") {
  std::mt19937_64 rng(63);
  for (int i = 0; i < 10; ++i) {
    const Frame a = random_frame(rng, 12 + 3 * i, 30 - i);
    const Frame b = random_frame(rng, 12 + 3 * i, 30 - i);
    const double ref = oracle::ssim_plane(oracle::as_double(std::vector<float>(a.pixels().begin(), a.pixels().end())),
                                          oracle::as_double(std::vector<float>(b.pixels().begin(), b.pixels().end())),
                                          a.height(), a.width());
    CHECK(std::abs(ssim(a, b) - ref) <= 1e-9);
  }
}

TEST_CASE("evaluate reports per-frame rows and exact means") {
  std::mt19937_64 rng(64);
  const Video gt = oracle::random_video(rng, 7, 16, 16);
  const MetricsReport same = evaluate(gt, gt);
  CHECK(same.frame_count == 7);
  CHECK(same.per_frame.size() == 7u);
  CHECK(same.mean_psnr_db == kPsnrCap);
  CHECK(same.mean_ssim == doctest::Approx(1.0).epsilon(1e-12));

  const Video pred = oracle::random_video(rng, 7, 16, 16);
  const MetricsReport r = evaluate(pred, gt);
  double ps = 0, ss = 0;
  for (int t = 0; t < 7; ++t) {
    CHECK(r.per_frame[t].index == t);
    CHECK(r.per_frame[t].psnr_db == psnr(pred.frame(t), gt.frame(t)));
    CHECK(r.per_frame[t].ssim == ssim(pred.frame(t), gt.frame(t)));
    ps += r.per_frame[t].psnr_db;
    ss += r.per_frame[t].ssim;
  }
  CHECK(r.mean_psnr_db == ps / 7);
  CHECK(r.mean_ssim == ss / 7);

  // Metrics are per frame: permuting both videos permutes the rows.
  const std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
  const MetricsReport p = evaluate(pred.select_frames(perm), gt.select_frames(perm));
  for (int t = 0; t < 7; ++t) CHECK(p.per_frame[t].psnr_db == r.per_frame[perm[t]].psnr_db);
  CHECK_THROWS_AS(evaluate(pred.head(6), gt), Error);
}

TEST_CASE("report csv layout") {
  std::mt19937_64 rng(65);
  const Video gt = oracle::random_video(rng, 3, 12, 12);
  const MetricsReport r = evaluate(oracle::random_video(rng, 3, 12, 12), gt);
  const fs::path dir = temp_dir("report");
  write_report_csv(r, dir / "report.csv");
  std::ifstream in(dir / "report.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 7u);
  CHECK(lines[0][0] == '#');
  CHECK(lines[1][0] == '#');
  CHECK(lines[2] == "frame_index,psnr_db,ssim");
  CHECK(lines[3].rfind("0,", 0) == 0);
  CHECK(lines[6].rfind("mean,", 0) == 0);
}

TEST_CASE("plots from a training log") {
  const fs::path dir = temp_dir("plots");
  write_log(dir / "log.csv", 100);
  emit_plots(dir / "log.csv", dir / "out");
  CHECK(fs::exists(dir / "out" / "loss.png"));
  CHECK(fs::exists(dir / "out" / "psnr.png"));
  const Image8 img = read_png(dir / "out" / "loss.png");
  CHECK(img.width > 0);

  const LogSeries s = read_log_csv(dir / "log.csv");
  REQUIRE(s.step.size() == 100u);
  for (size_t i = 1; i < s.step.size(); ++i) {
    CHECK(s.loss_inner[i] < s.loss_inner[i - 1]);
    CHECK(s.loss_test[i] < s.loss_test[i - 1]);
  }
  CHECK(s.psnr_db.size() == 100u);

  write_log(dir / "nopsnr.csv", 5, false);
  CHECK(read_log_csv(dir / "nopsnr.csv").psnr_db.empty());
  emit_plots(dir / "nopsnr.csv", dir / "out2");
  CHECK(fs::exists(dir / "out2" / "loss.png"));
}

TEST_CASE("malformed logs are errors") {
  const fs::path dir = temp_dir("badlogs");
  write_log(dir / "empty.csv", 0);
  CHECK_THROWS_AS(emit_plots(dir / "empty.csv", dir / "out"), Error);
  std::ofstream(dir / "header.csv") << "a,b,c\n1,2,3\n";
  CHECK_THROWS_AS(read_log_csv(dir / "header.csv"), Error);
  std::ofstream(dir / "ragged.csv") << "step,phase,loss_inner_mean,loss_test_mean\n1,meta,0.5\n";
  CHECK_THROWS_AS(read_log_csv(dir / "ragged.csv"), Error);
  std::ofstream(dir / "value.csv") << "step,phase,loss_inner_mean,loss_test_mean\n1,meta,abc,0.5\n";
  CHECK_THROWS_AS(read_log_csv(dir / "value.csv"), Error);
  CHECK_THROWS_AS(read_log_csv(dir / "missing.csv"), Error);
}
