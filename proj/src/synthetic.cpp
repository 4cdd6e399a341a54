#include "adavsr/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "adavsr/rng.hpp"

namespace adavsr {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Sprite {
  double cx, cy, vx, vy;
  double rx, ry, rot;
  double base, contrast;
  double freq, phase, tex_angle;
  bool checker;
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Video synthetic_video(std::uint64_t seed, std::uint64_t index, int frames, int size) {
  if (frames < 2 || size < 4) throw Error("synthetic_video: need >= 2 frames and size >= 4");
  auto rng = keyed_rng({seed, index, 0x5e17ULL});
  // Background: a + b * (x cos t + y sin t) + c * sin(...), drifting.
  const double g_angle = uniform(rng, 0.0, 2 * kPi);
  const double g_slope = uniform(rng, 0.2, 0.6);
  const double g_mid = uniform(rng, 0.3, 0.7);
  const double g_drift = uniform(rng, -1.5, 1.5);
  const double w_freq = uniform(rng, 1.0, 3.0) * 2 * kPi / size;
  const double w_amp = uniform(rng, 0.03, 0.1);
  const double w_angle = uniform(rng, 0.0, 2 * kPi);
  const double w_speed = uniform(rng, 0.5, 2.0);

  const int n_sprites = 3 + uniform_int(rng, 4);
  std::vector<Sprite> sprites;
  for (int i = 0; i < n_sprites; ++i) {
    Sprite s;
    s.cx = uniform(rng, 0.15, 0.85) * size;
    s.cy = uniform(rng, 0.15, 0.85) * size;
    const double speed = uniform(rng, 0.5, 4.0) * size / 256.0;
    const double dir = uniform(rng, 0.0, 2 * kPi);
    s.vx = speed * std::cos(dir);
    s.vy = speed * std::sin(dir);
    s.rx = uniform(rng, 0.06, 0.18) * size;
    s.ry = uniform(rng, 0.06, 0.18) * size;
    s.rot = uniform(rng, 0.0, kPi);
    s.base = uniform(rng, 0.15, 0.85);
    s.contrast = uniform(rng, 0.1, 0.3);
    s.freq = uniform(rng, 0.15, 0.6);
    s.phase = uniform(rng, 0.0, 2 * kPi);
    s.tex_angle = uniform(rng, 0.0, kPi);
    s.checker = uniform01(rng) < 0.4;
    sprites.push_back(s);
  }

  const size_t plane = static_cast<size_t>(size) * size;
  std::vector<float> data(plane * frames);
  for (int t = 0; t < frames; ++t) {
    float* out = data.data() + plane * t;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double u = (x - size / 2.0) / size, v = (y - size / 2.0) / size;
        double val = g_mid + g_slope * (u * std::cos(g_angle) + v * std::sin(g_angle)) + g_drift * 0.01 * t;
        val += w_amp * std::sin(w_freq * (x * std::cos(w_angle) + y * std::sin(w_angle)) + w_speed * t);
        for (const Sprite& s : sprites) {
          const double px = x - (s.cx + s.vx * t), py = y - (s.cy + s.vy * t);
          const double c = std::cos(s.rot), sn = std::sin(s.rot);
          const double lx = (c * px + sn * py) / s.rx, ly = (-sn * px + c * py) / s.ry;
          const double r = std::sqrt(lx * lx + ly * ly);
          const double alpha = 1.0 - smoothstep(0.92, 1.08, r);
          if (alpha <= 0.0) continue;
          const double tc = std::cos(s.tex_angle), ts = std::sin(s.tex_angle);
          const double a = tc * px + ts * py, b = -ts * px + tc * py;
          double tex = std::sin(s.freq * a + s.phase);
          if (s.checker) tex *= std::sin(s.freq * b);
          const double sprite = s.base + s.contrast * tex;
          val = (1.0 - alpha) * val + alpha * sprite;
        }
        out[static_cast<size_t>(y) * size + x] = static_cast<float>(std::clamp(val, 0.0, 1.0));
      }
  }
  return Video(frames, size, size, 1, std::move(data));
}

std::vector<Video> synthetic_dataset(std::uint64_t seed, int count, int frames, int size) {
  std::vector<Video> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synthetic_video(seed, static_cast<std::uint64_t>(i), frames, size));
  return out;
}

}  // namespace adavsr
