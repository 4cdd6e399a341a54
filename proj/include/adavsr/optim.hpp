#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adavsr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment state for one flat parameter vector.
struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t t = 0;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam step, in place. Moments are lazily sized on the
/// first call.
/// Plain gradient descent: params[i] -= rate * grad[i]. Used by the inner
/// (task-specific) loop.
template <class T>
void sgd_step(std::span<T> params, std::span<const T> grad, double rate) {
  for (size_t i = 0; i < params.size(); ++i) params[i] = params[i] - grad[i] * T(rate);
}

void adam_step(std::vector<float>& params, std::span<const float> grad, AdamState& state, double lr,
               const AdamConfig& cfg = {});

}  // namespace adavsr
