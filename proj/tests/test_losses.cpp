#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "adavsr/adapt_infer.hpp"
#include "adavsr/train_external.hpp"

using namespace adavsr;

namespace {

ArchitectureSpec small_arch() {
  ArchitectureSpec a;
  a.tsr_features = 4;
  a.ssr_features = 4;
  return a;
}

// Naive S(F(x)) in double, frame-major planar.
std::vector<double> naive_pipeline(const Model& m, const Video& x, std::vector<double>* mid = nullptr) {
  const auto f = oracle::tsr(*m.tsr.net, oracle::as_double(m.tsr.values), oracle::samples(x), x.frame_count(),
                             x.channels(), x.height(), x.width());
  if (mid) *mid = f;
  return oracle::ssr(*m.ssr.net, oracle::as_double(m.ssr.values), f, 2 * x.frame_count() - 1, x.channels(),
                     x.height(), x.width());
}

}  // namespace

TEST_CASE("ssr pretraining loss matches the nested-loop oracle") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const Model m = oracle::randomize(init_params(small_arch(), i), rng, 0.1);
    std::vector<SsrPair> batch;
    double ref = 0;
    const int b = 1 + i % 3;
    for (int k = 0; k < b; ++k) {
      const Video hr = oracle::random_video(rng, 2, 16, 12);
      const Video lr = spatial_downscale(hr, KernelSpec{});
      const auto pred = oracle::ssr(*m.ssr.net, oracle::as_double(m.ssr.values), oracle::samples(lr), 2, 1, 4, 3);
      ref += oracle::l1_mean(pred, hr, 2) / b;
      batch.push_back({lr, hr});
    }
    CHECK(std::abs(loss_ssr_pretrain(m.ssr, batch) - ref) <= 1e-7);
  }
}

TEST_CASE("tsr pretraining loss matches the nested-loop oracle") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 20; ++i) {
    const Model m = oracle::randomize(init_params(small_arch(), i), rng, 0.1);
    std::vector<TsrPair> batch;
    double ref = 0;
    const int b = 1 + i % 3;
    const int frames = 3 + 2 * (i % 3);
    for (int k = 0; k < b; ++k) {
      const Video hr = oracle::random_video(rng, frames, 8, 8);
      const Video lfr = temporal_downscale(hr, TemporalOp::alternate);
      const auto pred = oracle::tsr(*m.tsr.net, oracle::as_double(m.tsr.values), oracle::samples(lfr),
                                    lfr.frame_count(), 1, 8, 8);
      ref += oracle::l1_mean(pred, hr, frames) / b;
      batch.push_back({lfr, hr});
    }
    CHECK(std::abs(loss_tsr_pretrain(m.tsr, batch) - ref) <= 1e-7);
  }
  std::vector<TsrPair> bad = {{oracle::random_video(rng, 3, 4, 4), oracle::random_video(rng, 4, 4, 4)}};
  CHECK_THROWS_AS(loss_tsr_pretrain(init_params(small_arch(), 0).tsr, bad), Error);
}

TEST_CASE("task-specific loss matches the nested-loop oracle") {
  std::mt19937_64 rng(33);
  TaskDistribution d;
  for (int i = 0; i < 20; ++i) {
    d.seed = static_cast<std::uint64_t>(i);
    const Model m = oracle::randomize(init_params(small_arch(), i), rng, 0.1);
    std::vector<Video> hr = {oracle::smooth_video(rng, 5 + i % 3, 32, 32)};
    if (i % 2) hr.push_back(oracle::random_video(rng, 5, 32, 16));
    const MetaBatch mb = make_meta_batch(hr, d, 0, MetaBatchOptions{0, 16});
    double ref = 0;
    for (const TrainTriple& t : mb.train) {
      std::vector<double> mid;
      const auto out = naive_pipeline(m, t.ts, &mid);
      const int n = 2 * t.ts.frame_count() - 1;
      ref += (oracle::l1_mean(mid, t.s, n) + oracle::l1_mean(out, t.lr, n)) / static_cast<double>(mb.train.size());
    }
    CHECK(std::abs(task_loss<double>(cast_model<double>(m), mb.train, LossSpec{}) - ref) <= 1e-7);
    CHECK(std::abs(task_loss<float>(m, mb.train, LossSpec{}) - ref) <= 1e-5);

    double ref_te = 0;
    for (const TestTriple& t : mb.test) {
      std::vector<double> mid;
      const auto out = naive_pipeline(m, t.lr, &mid);
      const int n = 2 * t.lr.frame_count() - 1;
      ref_te +=
          (oracle::l1_mean(mid, t.lr_hfr, n) + oracle::l1_mean(out, t.hr, n)) / static_cast<double>(mb.test.size());
    }
    CHECK(std::abs(test_loss<double>(cast_model<double>(m), mb.test, LossSpec{}) - ref_te) <= 1e-7);
  }
}

TEST_CASE("internal loss matches the nested-loop oracle") {
  std::mt19937_64 rng(34);
  TaskDistribution d;
  for (int i = 0; i < 20; ++i) {
    const Model m = oracle::randomize(init_params(small_arch(), i), rng, 0.1);
    const Video lr = oracle::smooth_video(rng, 3 + i % 4, 16, 20);
    const DegradationTask task = sample_task(d, static_cast<std::uint64_t>(i));
    const InternalPair pair = build_internal_pair(lr, KernelProvider::oracle(task));
    const Video vi = temporal_downscale(spatial_downscale(lr, task.kernel), TemporalOp::alternate);
    REQUIRE(pair.input == vi);
    const int n = 2 * vi.frame_count() - 1;
    const double ref = oracle::l1_mean(naive_pipeline(m, vi), lr, n);
    CHECK(std::abs(internal_loss(m, pair) - ref) <= 1e-7);
  }
}

TEST_CASE("sum reduction is the mean times the sample count") {
  std::mt19937_64 rng(35);
  const Model m = oracle::randomize(init_params(small_arch(), 1), rng, 0.1);
  const ModelParams<double> p = cast_model<double>(m);
  const Video in = oracle::random_video(rng, 3, 4, 4);
  const Video fin = oracle::random_video(rng, 5, 16, 16);
  const PipelineSample s{&in, nullptr, &fin};
  LossSpec mean, sum;
  sum.reduction = Reduction::sum;
  const double a = pipeline_objective<double>(p, std::span(&s, 1), mean, nullptr);
  const double b = pipeline_objective<double>(p, std::span(&s, 1), sum, nullptr);
  CHECK(b == doctest::Approx(a * 5 * 16 * 16).epsilon(1e-12));
}

TEST_CASE("charbonnier approaches l1 and is smooth at zero") {
  std::mt19937_64 rng(36);
  const Model m = oracle::randomize(init_params(small_arch(), 1), rng, 0.1);
  const ModelParams<double> p = cast_model<double>(m);
  const Video in = oracle::random_video(rng, 3, 4, 4);
  const Video fin = oracle::random_video(rng, 5, 16, 16);
  const PipelineSample s{&in, nullptr, &fin};
  LossSpec l1, ch;
  ch.kind = LossKind::charbonnier;
  ch.epsilon = 1e-6;
  const double a = pipeline_objective<double>(p, std::span(&s, 1), l1, nullptr);
  const double b = pipeline_objective<double>(p, std::span(&s, 1), ch, nullptr);
  CHECK(std::abs(a - b) <= 1e-6);
  // A perfect prediction has zero loss and zero gradient.
  const Model init = init_params(small_arch(), 1);
  const Video x = oracle::smooth_video(rng, 3, 4, 4);
  const Video y = forward_pipeline(init.tsr, init.ssr, x);
  const ModelParams<double> ip = cast_model<double>(init);
  ModelParams<double> g = zeros_like(ip);
  ch.epsilon = 1e-3;
  const PipelineSample exact{&x, nullptr, &y};
  CHECK(pipeline_objective<double>(ip, std::span(&exact, 1), ch, &g) <= 1e-6);
}

TEST_CASE("objective stats report the final-stage psnr") {
  std::mt19937_64 rng(37);
  const Model m = init_params(small_arch(), 1);
  const Video in = Video::filled(3, 4, 4, 1, 0.5f);
  const Video fin = Video::filled(5, 16, 16, 1, 0.6f);
  const PipelineSample s{&in, nullptr, &fin};
  ObjectiveStats stats;
  pipeline_objective<float>(m, std::span(&s, 1), LossSpec{}, nullptr, &stats);
  CHECK(stats.final_count == 5u * 256u);
  CHECK(stats.final_psnr() == doctest::Approx(20.0).epsilon(1e-5));
  ObjectiveStats none;
  CHECK(none.final_psnr() == 0.0);
}

TEST_CASE("loss shape mismatches are errors") {
  const Model m = init_params(small_arch(), 1);
  const Video in = Video::filled(3, 4, 4, 1, 0.5f);
  const Video wrong = Video::filled(5, 12, 16, 1, 0.6f);
  const Video short_target = Video::filled(4, 16, 16, 1, 0.6f);
  const PipelineSample a{&in, nullptr, &wrong};
  const PipelineSample b{&in, nullptr, &short_target};
  CHECK_THROWS_AS(pipeline_objective<float>(m, std::span(&a, 1), LossSpec{}, nullptr), Error);
  CHECK_THROWS_AS(pipeline_objective<float>(m, std::span(&b, 1), LossSpec{}, nullptr), Error);
  CHECK_THROWS_AS(pipeline_objective<float>(m, std::span<const PipelineSample>(), LossSpec{}, nullptr), Error);
}
