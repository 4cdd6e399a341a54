#pragma once

#include <cstdint>
#include <vector>

#include "adavsr/video.hpp"

namespace adavsr {

/// Procedural grayscale clip: a drifting smooth gradient background with a
/// few textured sprites moving on linear sub-pixel trajectories. A pure
/// function of (seed, index).
Video synthetic_video(std::uint64_t seed, std::uint64_t index, int frames, int size);

std::vector<Video> synthetic_dataset(std::uint64_t seed, int count, int frames, int size);

}  // namespace adavsr
