#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adavsr {

/// Raised for any violated precondition or malformed input in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One image with planar channel layout: pixel (y, x, c) lives at
/// `c * height * width + y * width + x`. Values lie in [0, 1].
class Frame {
 public:
  Frame(int height, int width, int channels, std::vector<float> pixels);

  static Frame filled(int height, int width, int channels, float value);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  float at(int y, int x, int c) const {
    return pixels_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
  }
  std::span<const float> pixels() const { return pixels_; }

 private:
  int height_;
  int width_;
  int channels_;
  std::vector<float> pixels_;
};

/// An immutable sequence of at least two equally sized frames in the unit
/// pixel domain. Storage is frame-major, each frame planar (see Frame).
class Video {
 public:
  /// Validates shape and range; throws Error on any violation.
  Video(int frames, int height, int width, int channels, std::vector<float> samples);

  /// Same as the constructor but clamps samples into [0, 1] first. NaNs are
  /// still rejected.
  static Video clamped(int frames, int height, int width, int channels, std::vector<float> samples);
  static Video filled(int frames, int height, int width, int channels, float value);
  static Video from_frames(const std::vector<Frame>& frames);

  int frame_count() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  size_t frame_size() const { return static_cast<size_t>(channels_) * height_ * width_; }

  float at(int t, int y, int x, int c) const {
    return samples_[((static_cast<size_t>(t) * channels_ + c) * height_ + y) * width_ + x];
  }
  std::span<const float> samples() const { return samples_; }
  std::span<const float> frame_samples(int t) const {
    return std::span<const float>(samples_).subspan(static_cast<size_t>(t) * frame_size(), frame_size());
  }
  Frame frame(int t) const;

  /// Keeps the listed frames in the given order.
  Video select_frames(std::span<const int> indices) const;
  /// First `count` frames.
  Video head(int count) const;

  bool operator==(const Video& other) const = default;

 private:
  int frames_;
  int height_;
  int width_;
  int channels_;
  std::vector<float> samples_;
};

/// Loads every `*.png` in `directory` in lexicographic filename order.
Video load_video(const std::filesystem::path& directory);

/// Writes frames as `000000.png`, `000001.png`, ... (8-bit, gray or RGB).
void save_video(const Video& video, const std::filesystem::path& directory);

/// Spatial crop of every frame. `size` must be divisible by `scale`.
Video extract_patch(const Video& video, int top, int left, int size, int scale = 4);

}  // namespace adavsr
