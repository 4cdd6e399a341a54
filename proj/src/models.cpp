#include "adavsr/models.hpp"

#include <cmath>

#include "adavsr/network.hpp"
#include "adavsr/rng.hpp"

namespace adavsr {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::relu:
      return "relu";
    case Activation::leaky_relu:
      return "leaky_relu";
    case Activation::tanh:
      return "tanh";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  throw Error("unknown activation '" + std::string(name) + "'");
}

void validate(const ArchitectureSpec& arch) {
  if (arch.channels != 1 && arch.channels != 3) throw Error("architecture: channels must be 1 or 3");
  if (arch.tsr_features < 1 || arch.ssr_features < 1) throw Error("architecture: feature widths must be positive");
  if (arch.tsr_hidden_layers < 0 || arch.ssr_hidden_layers < 0)
    throw Error("architecture: hidden layer counts must be non-negative");
}

namespace {

class Builder {
 public:
  explicit Builder(Network& net, std::string prefix) : net_(net), prefix_(std::move(prefix)) {}

  void conv(const std::string& name, int in, int out) {
    Layer l;
    l.kind = LayerKind::conv3x3;
    l.in_channels = in;
    l.out_channels = out;
    l.weight_offset = add(name + ".weight", {out, in, 3, 3});
    l.bias_offset = add(name + ".bias", {out});
    net_.layers.push_back(l);
  }
  void act() { net_.layers.push_back(Layer{LayerKind::activation, 0, 0, 0, 0}); }
  void shuffle() { net_.layers.push_back(Layer{LayerKind::shuffle2, 0, 0, 0, 0}); }

 private:
  size_t add(const std::string& name, std::vector<int> shape) {
    size_t count = 1;
    for (int d : shape) count *= static_cast<size_t>(d);
    ParamEntry e{prefix_ + "." + name, std::move(shape), net_.parameter_count, count};
    net_.parameter_count += count;
    net_.entries.push_back(std::move(e));
    return net_.entries.back().offset;
  }

  Network& net_;
  std::string prefix_;
};

}  // namespace

std::shared_ptr<const Network> Network::build(NetRole role, const ArchitectureSpec& arch) {
  validate(arch);
  auto net = std::make_shared<Network>();
  net->role = role;
  net->arch = arch;
  const int c = arch.channels;
  if (role == NetRole::tsr) {
    Builder b(*net, "tsr");
    const int f = arch.tsr_features;
    b.conv("head", 2 * c, f);
    b.act();
    for (int i = 0; i < arch.tsr_hidden_layers; ++i) {
      b.conv("body" + std::to_string(i), f, f);
      b.act();
    }
    b.conv("out", f, c);
  } else {
    Builder b(*net, "ssr");
    const int f = arch.ssr_features;
    b.conv("head", c, f);
    b.act();
    for (int i = 0; i < arch.ssr_hidden_layers; ++i) {
      b.conv("body" + std::to_string(i), f, f);
      b.act();
    }
    b.conv("up", f, 4 * f);
    b.shuffle();
    b.act();
    b.conv("out", f, 4 * c);
    b.shuffle();
  }
  return net;
}

const ParamEntry& Network::entry(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw Error("no parameter named '" + std::string(name) + "'");
}

namespace {

ParamSet init_network(const std::shared_ptr<const Network>& net, std::uint64_t seed, std::uint64_t stream) {
  ParamSet p{net, std::vector<float>(net->parameter_count, 0.0f)};
  auto rng = keyed_rng({seed, stream, 0x1a17ULL});
  // The last conv is the residual head and stays zero.
  size_t last_conv = 0;
  for (size_t i = 0; i < net->layers.size(); ++i)
    if (net->layers[i].kind == LayerKind::conv3x3) last_conv = i;
  for (size_t i = 0; i < net->layers.size(); ++i) {
    const Layer& l = net->layers[i];
    if (l.kind != LayerKind::conv3x3 || i == last_conv) continue;
    const double fan_in = 9.0 * l.in_channels;
    const double bound = std::sqrt(6.0 / fan_in);
    const size_t n = static_cast<size_t>(l.out_channels) * l.in_channels * 9;
    for (size_t k = 0; k < n; ++k) p.values[l.weight_offset + k] = static_cast<float>(uniform(rng, -bound, bound));
  }
  return p;
}

}  // namespace

Model init_params(const ArchitectureSpec& arch, std::uint64_t seed) {
  return Model{init_network(Network::build(NetRole::tsr, arch), seed, 1),
               init_network(Network::build(NetRole::ssr, arch), seed, 2)};
}

namespace {

Video to_video(const Clip<float>& c) {
  return Video::clamped(c.frames, c.height, c.width, c.channels, c.data);
}

}  // namespace

Video tsr_forward(const ParamSet& theta, const Video& video) {
  return to_video(tsr_apply<float>(theta, to_clip<float>(video), nullptr));
}

Video ssr_forward(const ParamSet& phi, const Video& video) {
  return to_video(ssr_apply<float>(phi, to_clip<float>(video), nullptr));
}

Video forward_pipeline(const ParamSet& theta, const ParamSet& phi, const Video& video) {
  // Intermediate stays unclamped; only the final output is clamped.
  return to_video(ssr_apply<float>(phi, tsr_apply<float>(theta, to_clip<float>(video), nullptr), nullptr));
}

Video bicubic_upscale4(const Video& video) { return to_video(bicubic_up4(to_clip<float>(video))); }

}  // namespace adavsr
