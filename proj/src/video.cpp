#include "adavsr/video.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adavsr {

namespace {

void check_dims(int height, int width, int channels) {
  if (height <= 0 || width <= 0) throw Error("frame dimensions must be positive");
  if (channels != 1 && channels != 3) throw Error("channels must be 1 or 3, got " + std::to_string(channels));
}

void check_range(std::span<const float> samples) {
  for (float v : samples) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error("pixel value outside [0, 1]: " + std::to_string(v));
  }
}

}  // namespace

Frame::Frame(int height, int width, int channels, std::vector<float> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  check_dims(height, width, channels);
  if (pixels_.size() != static_cast<size_t>(height) * width * channels) throw Error("frame buffer size mismatch");
  check_range(pixels_);
}

Frame Frame::filled(int height, int width, int channels, float value) {
  return Frame(height, width, channels, std::vector<float>(static_cast<size_t>(height) * width * channels, value));
}

Video::Video(int frames, int height, int width, int channels, std::vector<float> samples)
    : frames_(frames), height_(height), width_(width), channels_(channels), samples_(std::move(samples)) {
  check_dims(height, width, channels);
  if (frames < 2) throw Error("frame_count < 2");
  if (samples_.size() != static_cast<size_t>(frames) * frame_size()) throw Error("video buffer size mismatch");
  check_range(samples_);
}

Video Video::clamped(int frames, int height, int width, int channels, std::vector<float> samples) {
  for (float& v : samples) {
    if (std::isnan(v)) throw Error("NaN pixel value");
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return Video(frames, height, width, channels, std::move(samples));
}

Video Video::filled(int frames, int height, int width, int channels, float value) {
  return Video(frames, height, width, channels,
               std::vector<float>(static_cast<size_t>(frames) * height * width * channels, value));
}

Video Video::from_frames(const std::vector<Frame>& frames) {
  if (frames.size() < 2) throw Error("frame_count < 2");
  const Frame& first = frames.front();
  std::vector<float> samples;
  samples.reserve(frames.size() * first.pixels().size());
  for (const Frame& f : frames) {
    if (f.height() != first.height() || f.width() != first.width() || f.channels() != first.channels())
      throw Error("frames differ in shape");
    samples.insert(samples.end(), f.pixels().begin(), f.pixels().end());
  }
  return Video(static_cast<int>(frames.size()), first.height(), first.width(), first.channels(), std::move(samples));
}

Frame Video::frame(int t) const {
  if (t < 0 || t >= frames_) throw Error("frame index out of range");
  auto s = frame_samples(t);
  return Frame(height_, width_, channels_, std::vector<float>(s.begin(), s.end()));
}

Video Video::select_frames(std::span<const int> indices) const {
  std::vector<float> out;
  out.reserve(indices.size() * frame_size());
  for (int t : indices) {
    if (t < 0 || t >= frames_) throw Error("frame index out of range");
    auto s = frame_samples(t);
    out.insert(out.end(), s.begin(), s.end());
  }
  return Video(static_cast<int>(indices.size()), height_, width_, channels_, std::move(out));
}

Video Video::head(int count) const {
  if (count > frames_) throw Error("head: not enough frames");
  std::vector<float> out(samples_.begin(), samples_.begin() + static_cast<ptrdiff_t>(count * frame_size()));
  return Video(count, height_, width_, channels_, std::move(out));
}

Video extract_patch(const Video& video, int top, int left, int size, int scale) {
  if (size <= 0 || top < 0 || left < 0 || top + size > video.height() || left + size > video.width())
    throw Error("patch out of bounds: top=" + std::to_string(top) + " left=" + std::to_string(left) +
                " size=" + std::to_string(size));
  if (scale > 0 && size % scale != 0) throw Error("patch size not divisible by spatial scale");
  const int c_n = video.channels();
  std::vector<float> out;
  out.reserve(static_cast<size_t>(video.frame_count()) * c_n * size * size);
  for (int t = 0; t < video.frame_count(); ++t) {
    auto src = video.frame_samples(t);
    for (int c = 0; c < c_n; ++c) {
      for (int y = 0; y < size; ++y) {
        auto row = src.begin() + (static_cast<ptrdiff_t>(c) * video.height() + top + y) * video.width() + left;
        out.insert(out.end(), row, row + size);
      }
    }
  }
  return Video(video.frame_count(), size, size, c_n, std::move(out));
}

}  // namespace adavsr
