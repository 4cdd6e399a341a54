#include "adavsr/resample.hpp"

#include <algorithm>
#include <cmath>

#include "adavsr/video.hpp"

namespace adavsr {

double keys_cubic(double x, double a) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

int mirror_index(int i, int n, bool symmetric) {
  if (n == 1) return 0;
  if (symmetric) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  }
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

ResampleTaps bicubic_taps(int in_size, int out_size) {
  if (in_size <= 0 || out_size <= 0) throw Error("resample sizes must be positive");
  const double scale = static_cast<double>(out_size) / in_size;
  const double kernel_scale = scale < 1.0 ? scale : 1.0;
  const double width = 4.0 / kernel_scale;

  ResampleTaps t;
  t.in_size = in_size;
  t.out_size = out_size;
  t.taps = static_cast<int>(std::ceil(width)) + 2;
  t.index.resize(static_cast<size_t>(out_size) * t.taps);
  t.weight.resize(t.index.size());
  for (int o = 0; o < out_size; ++o) {
    const double u = (o + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(u - width / 2.0));
    double sum = 0.0;
    for (int k = 0; k < t.taps; ++k) {
      const int j = left + k;
      const double w = kernel_scale * keys_cubic(kernel_scale * (u - j));
      t.index[o * t.taps + k] = mirror_index(j, in_size, true);
      t.weight[o * t.taps + k] = w;
      sum += w;
    }
    for (int k = 0; k < t.taps; ++k) t.weight[o * t.taps + k] /= sum;
  }
  return t;
}

}  // namespace adavsr
