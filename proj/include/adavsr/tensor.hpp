#pragma once

#include <span>
#include <vector>

#include "adavsr/video.hpp"

namespace adavsr {

/// Unconstrained frame stack used inside the networks: frame-major, planar
/// channels, same layout as Video but without the [0, 1] invariant.
template <class T>
struct Clip {
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Clip() = default;
  Clip(int f, int c, int h, int w) : frames(f), channels(c), height(h), width(w), data(size_t(f) * c * h * w, T(0)) {}

  size_t plane_size() const { return static_cast<size_t>(height) * width; }
  size_t frame_size() const { return static_cast<size_t>(channels) * plane_size(); }
  T* frame(int t) { return data.data() + static_cast<size_t>(t) * frame_size(); }
  const T* frame(int t) const { return data.data() + static_cast<size_t>(t) * frame_size(); }
};

template <class T>
Clip<T> to_clip(const Video& v) {
  Clip<T> c(v.frame_count(), v.channels(), v.height(), v.width());
  auto s = v.samples();
  for (size_t i = 0; i < s.size(); ++i) c.data[i] = T(s[i]);
  return c;
}

}  // namespace adavsr
