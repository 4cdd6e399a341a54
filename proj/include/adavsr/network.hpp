#pragma once

// Training-mode (unclamped) forward passes with explicit reverse-mode
// backpropagation. Instantiated for float, double, Dual<float> and
// Dual<double>; the Dual instantiations give Hessian-vector products.

#include <vector>

#include "adavsr/dual.hpp"
#include "adavsr/models.hpp"
#include "adavsr/tensor.hpp"

namespace adavsr {

/// Intermediate activations of one pass through a layer stack.
template <class T>
using LayerTrace = std::vector<Clip<T>>;

template <class T>
struct TsrCache {
  std::vector<LayerTrace<T>> pairs;
};

template <class T>
struct SsrCache {
  std::vector<LayerTrace<T>> frames;
  int in_height = 0;
  int in_width = 0;
};

/// Runs the layer stack of `params` on one (C, H, W) tensor.
template <class T>
Clip<T> run_layers(const Params<T>& params, Clip<T> input, LayerTrace<T>* trace);

/// Backpropagates `grad_out` through a traced stack, accumulating into
/// `grad_params` (same layout as params). Returns the input gradient when
/// `want_input_grad` is set, otherwise an empty Clip.
template <class T>
Clip<T> backprop_layers(const Params<T>& params, const LayerTrace<T>& trace, Clip<T> grad_out, T* grad_params,
                        bool want_input_grad);

/// F_theta: m frames -> 2m-1 frames. Odd frames are the cubic temporal
/// midpoint plus a residual computed from the two flanking frames.
template <class T>
Clip<T> tsr_apply(const Params<T>& theta, const Clip<T>& input, TsrCache<T>* cache);

template <class T>
void tsr_backprop(const Params<T>& theta, const TsrCache<T>& cache, const Clip<T>& grad_out, T* grad_theta);

/// S_phi: per-frame bicubic x4 baseline plus a sub-pixel residual.
template <class T>
Clip<T> ssr_apply(const Params<T>& phi, const Clip<T>& input, SsrCache<T>* cache);

template <class T>
Clip<T> ssr_backprop(const Params<T>& phi, const SsrCache<T>& cache, const Clip<T>& grad_out, T* grad_phi,
                     bool want_input_grad);

/// Cubic temporal midpoints (2m-1 frames, unclamped), the TSR baseline.
template <class T>
Clip<T> temporal_baseline(const Clip<T>& input);

/// Per-frame bicubic x4 upscale (unclamped), the SSR baseline.
template <class T>
Clip<T> bicubic_up4(const Clip<T>& input);

}  // namespace adavsr
