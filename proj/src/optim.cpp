#include "adavsr/optim.hpp"

#include <cmath>

#include "adavsr/video.hpp"

namespace adavsr {

void adam_step(std::vector<float>& params, std::span<const float> grad, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw Error("adam: gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0f);
    state.v.assign(params.size(), 0.0f);
  }
  if (state.m.size() != params.size()) throw Error("adam: state size mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    const double m = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    params[i] = static_cast<float>(params[i] - lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon));
  }
}

}  // namespace adavsr
