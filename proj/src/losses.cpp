#include "adavsr/losses.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "adavsr/network.hpp"

namespace adavsr {

namespace {

// Wider accumulator for long reductions.
template <class T> struct Accum { using type = T; };
template <> struct Accum<float> { using type = double; };
template <> struct Accum<Dual<float>> { using type = Dual<double>; };

template <class T, class A>
T narrow(const A& a) {
  if constexpr (is_dual<T>::value && is_dual<A>::value) {
    using S = decltype(T{}.v);
    return T(static_cast<S>(a.v), static_cast<S>(a.d));
  } else {
    return static_cast<T>(a);
  }
}

template <class A, class T>
A widen(const T& x) {
  if constexpr (is_dual<T>::value && is_dual<A>::value) {
    return A(x.v, x.d);
  } else {
    return A(x);
  }
}

template <class T>
T abs_value(const T& r) {
  return r < T(0) ? T(0) - r : r;
}

// Adds weight * loss(pred, target[:frames]) and its gradient (scaled by
// weight) into `grad`.
template <class T>
T compare(const Clip<T>& pred, const Video& target, const LossSpec& loss, double weight, Clip<T>* grad,
          ObjectiveStats* stats) {
  if (target.frame_count() < pred.frames || target.height() != pred.height || target.width() != pred.width ||
      target.channels() != pred.channels)
    throw Error("loss: shape mismatch, prediction " + std::to_string(pred.frames) + "x" + std::to_string(pred.height) +
                "x" + std::to_string(pred.width) + " vs target " + std::to_string(target.frame_count()) + "x" +
                std::to_string(target.height()) + "x" + std::to_string(target.width()));
  const size_t n = pred.data.size();
  const double scale = loss.reduction == Reduction::mean ? weight / static_cast<double>(n) : weight;
  auto tgt = target.samples();
  typename Accum<T>::type acc(0);
  double sq = 0.0;
  const double eps2 = loss.epsilon * loss.epsilon;
  for (size_t i = 0; i < n; ++i) {
    const T r = pred.data[i] - T(tgt[i]);
    const double rv = value_of(r);
    sq += rv * rv;
    if (loss.kind == LossKind::l1) {
      acc += widen<typename Accum<T>::type>(abs_value(r));
      if (grad) grad->data[i] += T(rv > 0.0 ? scale : (rv < 0.0 ? -scale : 0.0));
    } else {
      using std::sqrt;
      const T root = sqrt(r * r + T(eps2));
      acc += widen<typename Accum<T>::type>(root - T(loss.epsilon));
      if (grad) grad->data[i] += (r / root) * scale;
    }
  }
  if (stats) {
    stats->final_squared_error += sq;
    stats->final_count += n;
  }
  return narrow<T>(acc) * scale;
}

}  // namespace

double ObjectiveStats::final_psnr() const {
  if (final_count == 0) return 0.0;
  const double mse = final_squared_error / static_cast<double>(final_count);
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

template <class T>
T pipeline_objective(const ModelParams<T>& params, std::span<const PipelineSample> samples, const LossSpec& loss,
                     ModelParams<T>* grad, ObjectiveStats* stats) {
  if (samples.empty()) throw Error("objective: empty batch");
  const double weight = 1.0 / static_cast<double>(samples.size());
  T total(0);
  for (const PipelineSample& s : samples) {
    if (!s.input) throw Error("objective: missing input");
    TsrCache<T> tsr_cache;
    Clip<T> mid = tsr_apply(params.tsr, to_clip<T>(*s.input), grad ? &tsr_cache : nullptr);
    Clip<T> grad_mid;
    if (grad) grad_mid = Clip<T>(mid.frames, mid.channels, mid.height, mid.width);
    if (s.mid_target) total += compare(mid, *s.mid_target, loss, weight, grad ? &grad_mid : nullptr, nullptr);
    if (s.final_target) {
      SsrCache<T> ssr_cache;
      Clip<T> out = ssr_apply(params.ssr, mid, grad ? &ssr_cache : nullptr);
      Clip<T> grad_out;
      if (grad) grad_out = Clip<T>(out.frames, out.channels, out.height, out.width);
      total += compare(out, *s.final_target, loss, weight, grad ? &grad_out : nullptr, stats);
      if (grad) {
        Clip<T> g = ssr_backprop(params.ssr, ssr_cache, grad_out, grad->ssr.values.data(), true);
        for (size_t i = 0; i < g.data.size(); ++i) grad_mid.data[i] += g.data[i];
      }
    }
    if (grad) tsr_backprop(params.tsr, tsr_cache, grad_mid, grad->tsr.values.data());
  }
  return total;
}

template <class T>
T ssr_objective(const Params<T>& phi, std::span<const Video> inputs, std::span<const Video> targets,
                const LossSpec& loss, Params<T>* grad, ObjectiveStats* stats) {
  if (inputs.empty() || inputs.size() != targets.size()) throw Error("ssr objective: batch size mismatch");
  const double weight = 1.0 / static_cast<double>(inputs.size());
  T total(0);
  for (size_t b = 0; b < inputs.size(); ++b) {
    if (targets[b].frame_count() != inputs[b].frame_count()) throw Error("ssr objective: frame count mismatch");
    SsrCache<T> cache;
    Clip<T> out = ssr_apply(phi, to_clip<T>(inputs[b]), grad ? &cache : nullptr);
    Clip<T> grad_out;
    if (grad) grad_out = Clip<T>(out.frames, out.channels, out.height, out.width);
    total += compare(out, targets[b], loss, weight, grad ? &grad_out : nullptr, stats);
    if (grad) ssr_backprop(phi, cache, grad_out, grad->values.data(), false);
  }
  return total;
}

#define ADAVSR_INSTANTIATE(T)                                                                                    \
  template T pipeline_objective<T>(const ModelParams<T>&, std::span<const PipelineSample>, const LossSpec&,     \
                                   ModelParams<T>*, ObjectiveStats*);                                           \
  template T ssr_objective<T>(const Params<T>&, std::span<const Video>, std::span<const Video>, const LossSpec&, \
                              Params<T>*, ObjectiveStats*);

ADAVSR_INSTANTIATE(float)
ADAVSR_INSTANTIATE(double)
ADAVSR_INSTANTIATE(Dual<float>)
ADAVSR_INSTANTIATE(Dual<double>)

#undef ADAVSR_INSTANTIATE

}  // namespace adavsr
