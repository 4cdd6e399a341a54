#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "adavsr/video.hpp"

namespace adavsr {

enum class Activation { relu, leaky_relu, tanh };

std::string to_string(Activation act);
Activation parse_activation(std::string_view name);

/// Shape of both networks: small residual CNNs over analytic baselines.
///
/// TSR: conv(2C->F), act, [conv(F->F), act] x tsr_hidden_layers, conv(F->C).
/// SSR: conv(C->F), act, [conv(F->F), act] x ssr_hidden_layers, conv(F->4F),
///      shuffle x2, act, conv(F->4C), shuffle x2.
struct ArchitectureSpec {
  int channels = 1;
  int tsr_features = 16;
  int tsr_hidden_layers = 1;
  int ssr_features = 16;
  int ssr_hidden_layers = 1;
  Activation activation = Activation::leaky_relu;

  bool operator==(const ArchitectureSpec&) const = default;
};

void validate(const ArchitectureSpec& arch);

enum class NetRole { tsr, ssr };
enum class LayerKind { conv3x3, activation, shuffle2 };

struct Layer {
  LayerKind kind = LayerKind::conv3x3;
  int in_channels = 0;
  int out_channels = 0;
  size_t weight_offset = 0;  // [out][in][3][3]
  size_t bias_offset = 0;    // [out]
};

struct ParamEntry {
  std::string name;
  std::vector<int> shape;
  size_t offset = 0;
  size_t count = 0;
};

/// Layer graph plus the ordered parameter layout of one network.
struct Network {
  NetRole role = NetRole::tsr;
  ArchitectureSpec arch;
  std::vector<Layer> layers;
  std::vector<ParamEntry> entries;
  size_t parameter_count = 0;

  static std::shared_ptr<const Network> build(NetRole role, const ArchitectureSpec& arch);
  const ParamEntry& entry(std::string_view name) const;
};

/// An ordered, named parameter vector bound to its network. Values are plain
/// data; updates produce new Params.
template <class T>
struct Params {
  std::shared_ptr<const Network> net;
  std::vector<T> values;

  size_t size() const { return values.size(); }
  bool operator==(const Params& o) const {
    return net && o.net && net->role == o.net->role && net->arch == o.net->arch && values == o.values;
  }
};

/// theta (TSR) or phi (SSR) in single precision.
using ParamSet = Params<float>;

template <class T>
struct ModelParams {
  Params<T> tsr;
  Params<T> ssr;

  size_t size() const { return tsr.size() + ssr.size(); }
  bool operator==(const ModelParams&) const = default;
};

using Model = ModelParams<float>;

template <class To, class From>
Params<To> cast_params(const Params<From>& p) {
  Params<To> out{p.net, std::vector<To>(p.values.size())};
  for (size_t i = 0; i < p.values.size(); ++i) out.values[i] = static_cast<To>(p.values[i]);
  return out;
}

template <class To, class From>
ModelParams<To> cast_model(const ModelParams<From>& m) {
  return {cast_params<To>(m.tsr), cast_params<To>(m.ssr)};
}

/// He-uniform weights, zero biases, and zero residual-output layers so the
/// untrained networks reproduce their baselines exactly.
Model init_params(const ArchitectureSpec& arch, std::uint64_t seed);

/// Inference-mode forwards on videos; outputs are clamped to [0, 1].
/// TSR returns 2m-1 frames, SSR quadruples height and width.
Video tsr_forward(const ParamSet& theta, const Video& video);
Video ssr_forward(const ParamSet& phi, const Video& video);
Video forward_pipeline(const ParamSet& theta, const ParamSet& phi, const Video& video);

/// Bicubic x4 upscale used as the SSR baseline (clamped).
Video bicubic_upscale4(const Video& video);

}  // namespace adavsr
