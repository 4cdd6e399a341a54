#pragma once

#include <vector>

namespace adavsr {

/// Keys cubic convolution kernel; a = -0.5 is the usual "bicubic".
double keys_cubic(double x, double a = -0.5);

/// Mirror an out-of-range index back into [0, n). `symmetric` repeats the
/// edge sample (..., 1, 0 | 0, 1, ...); otherwise the edge is the axis of
/// reflection (..., 2, 1 | 0, 1, 2, ...).
int mirror_index(int i, int n, bool symmetric);

/// Sparse 1-D resampling operator: output sample `o` is
/// `sum_k weight[o * taps + k] * input[index[o * taps + k]]`.
struct ResampleTaps {
  int in_size = 0;
  int out_size = 0;
  int taps = 0;
  std::vector<int> index;
  std::vector<double> weight;
};

/// Bicubic resize taps in the imresize convention: output sample `o` sits at
/// input coordinate `(o + 0.5) / scale - 0.5`, the kernel is widened by
/// `1 / scale` when shrinking (antialiasing), weights are normalized and
/// borders are mirrored symmetrically.
ResampleTaps bicubic_taps(int in_size, int out_size);

/// Separable resize of one plane (rows = height). Works for any scalar type
/// that can be multiplied by a double.
template <class T>
void resample_plane(const T* in, int height, int width, const ResampleTaps& ty, const ResampleTaps& tx, T* out) {
  std::vector<T> tmp(static_cast<size_t>(height) * tx.out_size, T(0));
  for (int y = 0; y < height; ++y) {
    const T* row = in + static_cast<size_t>(y) * width;
    T* trow = tmp.data() + static_cast<size_t>(y) * tx.out_size;
    for (int o = 0; o < tx.out_size; ++o) {
      T acc(0);
      for (int k = 0; k < tx.taps; ++k) acc += row[tx.index[o * tx.taps + k]] * tx.weight[o * tx.taps + k];
      trow[o] = acc;
    }
  }
  for (int o = 0; o < ty.out_size; ++o) {
    T* orow = out + static_cast<size_t>(o) * tx.out_size;
    for (int x = 0; x < tx.out_size; ++x) orow[x] = T(0);
    for (int k = 0; k < ty.taps; ++k) {
      const double w = ty.weight[o * ty.taps + k];
      const T* trow = tmp.data() + static_cast<size_t>(ty.index[o * ty.taps + k]) * tx.out_size;
      for (int x = 0; x < tx.out_size; ++x) orow[x] += trow[x] * w;
    }
  }
}

/// Adjoint of resample_plane: accumulates into `grad_in` (height x width).
template <class T>
void resample_plane_adjoint(const T* grad_out, int height, int width, const ResampleTaps& ty, const ResampleTaps& tx,
                            T* grad_in) {
  std::vector<T> tmp(static_cast<size_t>(height) * tx.out_size, T(0));
  for (int o = 0; o < ty.out_size; ++o) {
    const T* grow = grad_out + static_cast<size_t>(o) * tx.out_size;
    for (int k = 0; k < ty.taps; ++k) {
      const double w = ty.weight[o * ty.taps + k];
      T* trow = tmp.data() + static_cast<size_t>(ty.index[o * ty.taps + k]) * tx.out_size;
      for (int x = 0; x < tx.out_size; ++x) trow[x] += grow[x] * w;
    }
  }
  for (int y = 0; y < height; ++y) {
    const T* trow = tmp.data() + static_cast<size_t>(y) * tx.out_size;
    T* row = grad_in + static_cast<size_t>(y) * width;
    for (int o = 0; o < tx.out_size; ++o)
      for (int k = 0; k < tx.taps; ++k) row[tx.index[o * tx.taps + k]] += trow[o] * tx.weight[o * tx.taps + k];
  }
}

/// Midpoint of a cubic through four equally spaced samples (Keys, a = -0.5).
template <class T>
T cubic_midpoint(const T& before, const T& left, const T& right, const T& after) {
  return (left + right) * (9.0 / 16.0) - (before + after) * (1.0 / 16.0);
}

}  // namespace adavsr
