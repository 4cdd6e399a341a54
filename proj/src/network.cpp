#include "adavsr/network.hpp"

#include <algorithm>
#include <cmath>

#include "adavsr/resample.hpp"

namespace adavsr {

namespace {

constexpr double kLeakySlope = 0.1;

template <class T>
void conv3x3_forward(const T* in, int cin, int h, int w, const T* weight, const T* bias, int cout, T* out) {
  const size_t plane = static_cast<size_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    T* dst_plane = out + co * plane;
    std::fill(dst_plane, dst_plane + plane, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const T* src_plane = in + ci * plane;
      const T* wk = weight + (static_cast<size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          const T wv = wk[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            const T* src = src_plane + static_cast<size_t>(y + dy) * w + dx;
            T* dst = dst_plane + static_cast<size_t>(y) * w;
            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and, when grad_in is non-null, the input
// gradient.
template <class T>
void conv3x3_backward(const T* in, int cin, int h, int w, const T* weight, int cout, const T* grad_out, T* grad_weight,
                      T* grad_bias, T* grad_in) {
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<T> row_acc(w);
  for (int co = 0; co < cout; ++co) {
    const T* g_plane = grad_out + co * plane;
    T bsum(0);
    for (size_t p = 0; p < plane; ++p) bsum += g_plane[p];
    grad_bias[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const T* src_plane = in + ci * plane;
      const T* wk = weight + (static_cast<size_t>(co) * cin + ci) * 9;
      T* gwk = grad_weight + (static_cast<size_t>(co) * cin + ci) * 9;
      T* gin_plane = grad_in ? grad_in + ci * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          std::fill(row_acc.begin(), row_acc.end(), T(0));
          for (int y = y0; y < y1; ++y) {
            const T* src = src_plane + static_cast<size_t>(y + dy) * w + dx;
            const T* g = g_plane + static_cast<size_t>(y) * w;
            for (int x = x0; x < x1; ++x) row_acc[x] += g[x] * src[x];
          }
          T acc(0);
          for (int x = x0; x < x1; ++x) acc += row_acc[x];
          gwk[ky * 3 + kx] += acc;
          if (gin_plane) {
            const T wv = wk[ky * 3 + kx];
            for (int y = y0; y < y1; ++y) {
              T* gi = gin_plane + static_cast<size_t>(y + dy) * w + dx;
              const T* g = g_plane + static_cast<size_t>(y) * w;
              for (int x = x0; x < x1; ++x) gi[x] += wv * g[x];
            }
          }
        }
      }
    }
  }
}

template <class T>
T activate(Activation act, const T& x) {
  using std::tanh;
  switch (act) {
    case Activation::relu:
      return x > T(0) ? x : T(0);
    case Activation::leaky_relu:
      return x > T(0) ? x : x * kLeakySlope;
    case Activation::tanh:
      return tanh(x);
  }
  return x;
}

template <class T>
T activate_grad(Activation act, const T& x) {
  using std::tanh;
  switch (act) {
    case Activation::relu:
      return x > T(0) ? T(1) : T(0);
    case Activation::leaky_relu:
      return x > T(0) ? T(1) : T(kLeakySlope);
    case Activation::tanh: {
      const T t = tanh(x);
      return T(1) - t * t;
    }
  }
  return T(1);
}

template <class T>
Clip<T> shuffle2(const Clip<T>& in) {
  const int c_out = in.channels / 4;
  Clip<T> out(1, c_out, in.height * 2, in.width * 2);
  const size_t in_plane = in.plane_size();
  for (int c = 0; c < c_out; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const T* src = in.data.data() + (static_cast<size_t>(c) * 4 + i * 2 + j) * in_plane;
        T* dst = out.data.data() + static_cast<size_t>(c) * out.plane_size();
        for (int y = 0; y < in.height; ++y)
          for (int x = 0; x < in.width; ++x)
            dst[static_cast<size_t>(2 * y + i) * out.width + 2 * x + j] = src[static_cast<size_t>(y) * in.width + x];
      }
  return out;
}

template <class T>
Clip<T> unshuffle2(const Clip<T>& in) {
  Clip<T> out(1, in.channels * 4, in.height / 2, in.width / 2);
  const size_t out_plane = out.plane_size();
  for (int c = 0; c < in.channels; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        T* dst = out.data.data() + (static_cast<size_t>(c) * 4 + i * 2 + j) * out_plane;
        const T* src = in.data.data() + static_cast<size_t>(c) * in.plane_size();
        for (int y = 0; y < out.height; ++y)
          for (int x = 0; x < out.width; ++x)
            dst[static_cast<size_t>(y) * out.width + x] = src[static_cast<size_t>(2 * y + i) * in.width + 2 * x + j];
      }
  return out;
}

template <class T>
Clip<T> frame_as_tensor(const Clip<T>& clip, int t) {
  Clip<T> out(1, clip.channels, clip.height, clip.width);
  std::copy_n(clip.frame(t), clip.frame_size(), out.data.begin());
  return out;
}

}  // namespace

template <class T>
Clip<T> run_layers(const Params<T>& params, Clip<T> x, LayerTrace<T>* trace) {
  const Network& net = *params.net;
  for (const Layer& layer : net.layers) {
    switch (layer.kind) {
      case LayerKind::conv3x3: {
        Clip<T> y(1, layer.out_channels, x.height, x.width);
        conv3x3_forward(x.data.data(), layer.in_channels, x.height, x.width, params.values.data() + layer.weight_offset,
                        params.values.data() + layer.bias_offset, layer.out_channels, y.data.data());
        if (trace) trace->push_back(std::move(x));
        x = std::move(y);
        break;
      }
      case LayerKind::activation: {
        Clip<T> y = x;
        for (T& v : y.data) v = activate(net.arch.activation, v);
        if (trace) trace->push_back(std::move(x));
        x = std::move(y);
        break;
      }
      case LayerKind::shuffle2: {
        Clip<T> y = shuffle2(x);
        if (trace) trace->push_back(std::move(x));
        x = std::move(y);
        break;
      }
    }
  }
  return x;
}

template <class T>
Clip<T> backprop_layers(const Params<T>& params, const LayerTrace<T>& trace, Clip<T> g, T* grad_params,
                        bool want_input_grad) {
  const Network& net = *params.net;
  for (size_t k = net.layers.size(); k-- > 0;) {
    const Layer& layer = net.layers[k];
    const Clip<T>& input = trace[k];
    switch (layer.kind) {
      case LayerKind::conv3x3: {
        const bool need_in = k > 0 || want_input_grad;
        Clip<T> gin;
        if (need_in) gin = Clip<T>(1, layer.in_channels, input.height, input.width);
        conv3x3_backward(input.data.data(), layer.in_channels, input.height, input.width,
                         params.values.data() + layer.weight_offset, layer.out_channels, g.data.data(),
                         grad_params + layer.weight_offset, grad_params + layer.bias_offset,
                         need_in ? gin.data.data() : nullptr);
        if (!need_in) return Clip<T>{};
        g = std::move(gin);
        break;
      }
      case LayerKind::activation:
        for (size_t i = 0; i < g.data.size(); ++i) g.data[i] *= activate_grad(net.arch.activation, input.data[i]);
        break;
      case LayerKind::shuffle2:
        g = unshuffle2(g);
        break;
    }
  }
  return want_input_grad ? g : Clip<T>{};
}

template <class T>
Clip<T> temporal_baseline(const Clip<T>& in) {
  const int m = in.frames;
  Clip<T> out(2 * m - 1, in.channels, in.height, in.width);
  const size_t fs = in.frame_size();
  for (int t = 0; t < m; ++t) std::copy_n(in.frame(t), fs, out.frame(2 * t));
  for (int t = 0; t + 1 < m; ++t) {
    const T* a = in.frame(t);
    const T* b = in.frame(t + 1);
    const T* before = t > 0 ? in.frame(t - 1) : nullptr;
    const T* after = t + 2 < m ? in.frame(t + 2) : nullptr;
    T* dst = out.frame(2 * t + 1);
    for (size_t p = 0; p < fs; ++p) {
      const T pb = before ? before[p] : a[p] * 2.0 - b[p];
      const T pa = after ? after[p] : b[p] * 2.0 - a[p];
      dst[p] = cubic_midpoint(pb, a[p], b[p], pa);
    }
  }
  return out;
}

template <class T>
Clip<T> bicubic_up4(const Clip<T>& in) {
  const ResampleTaps ty = bicubic_taps(in.height, in.height * 4);
  const ResampleTaps tx = bicubic_taps(in.width, in.width * 4);
  Clip<T> out(in.frames, in.channels, in.height * 4, in.width * 4);
  for (int t = 0; t < in.frames; ++t)
    for (int c = 0; c < in.channels; ++c)
      resample_plane(in.frame(t) + c * in.plane_size(), in.height, in.width, ty, tx,
                     out.frame(t) + c * out.plane_size());
  return out;
}

template <class T>
Clip<T> tsr_apply(const Params<T>& theta, const Clip<T>& input, TsrCache<T>* cache) {
  if (input.frames < 2) throw Error("TSR needs at least 2 frames");
  if (theta.net->role != NetRole::tsr) throw Error("tsr_apply: parameters are not TSR parameters");
  if (input.channels != theta.net->arch.channels) throw Error("tsr_apply: channel mismatch");
  Clip<T> out = temporal_baseline(input);
  const size_t fs = input.frame_size();
  if (cache) cache->pairs.assign(input.frames - 1, {});
  for (int t = 0; t + 1 < input.frames; ++t) {
    Clip<T> pair(1, 2 * input.channels, input.height, input.width);
    std::copy_n(input.frame(t), fs, pair.data.begin());
    std::copy_n(input.frame(t + 1), fs, pair.data.begin() + static_cast<ptrdiff_t>(fs));
    Clip<T> r = run_layers(theta, std::move(pair), cache ? &cache->pairs[t] : nullptr);
    T* dst = out.frame(2 * t + 1);
    for (size_t p = 0; p < fs; ++p) dst[p] += r.data[p];
  }
  return out;
}

template <class T>
void tsr_backprop(const Params<T>& theta, const TsrCache<T>& cache, const Clip<T>& grad_out, T* grad_theta) {
  for (size_t t = 0; t < cache.pairs.size(); ++t) {
    Clip<T> g = frame_as_tensor(grad_out, static_cast<int>(2 * t + 1));
    backprop_layers(theta, cache.pairs[t], std::move(g), grad_theta, false);
  }
}

template <class T>
Clip<T> ssr_apply(const Params<T>& phi, const Clip<T>& input, SsrCache<T>* cache) {
  if (phi.net->role != NetRole::ssr) throw Error("ssr_apply: parameters are not SSR parameters");
  if (input.channels != phi.net->arch.channels) throw Error("ssr_apply: channel mismatch");
  Clip<T> out = bicubic_up4(input);
  if (cache) {
    cache->frames.assign(input.frames, {});
    cache->in_height = input.height;
    cache->in_width = input.width;
  }
  for (int t = 0; t < input.frames; ++t) {
    Clip<T> r = run_layers(phi, frame_as_tensor(input, t), cache ? &cache->frames[t] : nullptr);
    T* dst = out.frame(t);
    for (size_t p = 0; p < r.data.size(); ++p) dst[p] += r.data[p];
  }
  return out;
}

template <class T>
Clip<T> ssr_backprop(const Params<T>& phi, const SsrCache<T>& cache, const Clip<T>& grad_out, T* grad_phi,
                     bool want_input_grad) {
  const int h = cache.in_height, w = cache.in_width;
  const int frames = static_cast<int>(cache.frames.size());
  Clip<T> gin;
  ResampleTaps ty, tx;
  if (want_input_grad) {
    gin = Clip<T>(frames, grad_out.channels, h, w);
    ty = bicubic_taps(h, 4 * h);
    tx = bicubic_taps(w, 4 * w);
  }
  for (int t = 0; t < frames; ++t) {
    Clip<T> g = frame_as_tensor(grad_out, t);
    Clip<T> gi = backprop_layers(phi, cache.frames[t], g, grad_phi, want_input_grad);
    if (!want_input_grad) continue;
    T* dst = gin.frame(t);
    for (size_t p = 0; p < gi.data.size(); ++p) dst[p] += gi.data[p];
    for (int c = 0; c < grad_out.channels; ++c)
      resample_plane_adjoint(g.data.data() + c * g.plane_size(), h, w, ty, tx, dst + c * gin.plane_size());
  }
  return gin;
}

#define ADAVSR_INSTANTIATE(T)                                                                              \
  template Clip<T> run_layers<T>(const Params<T>&, Clip<T>, LayerTrace<T>*);                               \
  template Clip<T> backprop_layers<T>(const Params<T>&, const LayerTrace<T>&, Clip<T>, T*, bool);           \
  template Clip<T> tsr_apply<T>(const Params<T>&, const Clip<T>&, TsrCache<T>*);                            \
  template void tsr_backprop<T>(const Params<T>&, const TsrCache<T>&, const Clip<T>&, T*);                  \
  template Clip<T> ssr_apply<T>(const Params<T>&, const Clip<T>&, SsrCache<T>*);                            \
  template Clip<T> ssr_backprop<T>(const Params<T>&, const SsrCache<T>&, const Clip<T>&, T*, bool);         \
  template Clip<T> temporal_baseline<T>(const Clip<T>&);                                                    \
  template Clip<T> bicubic_up4<T>(const Clip<T>&);

ADAVSR_INSTANTIATE(float)
ADAVSR_INSTANTIATE(double)
ADAVSR_INSTANTIATE(Dual<float>)
ADAVSR_INSTANTIATE(Dual<double>)

#undef ADAVSR_INSTANTIATE

}  // namespace adavsr
