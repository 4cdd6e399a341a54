#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "adavsr/models.hpp"
#include "adavsr/optim.hpp"

namespace adavsr {

struct OptimizerState {
  AdamState tsr;
  AdamState ssr;

  bool operator==(const OptimizerState&) const = default;
};

/// Everything needed to resume training bit-exactly.
struct Checkpoint {
  Model model;
  std::optional<OptimizerState> optimizer;
  std::string phase = "init";
  std::int64_t step = 0;
  std::string config_hash;
};

/// Single-file archive: a text manifest (architecture, config hash, phase,
/// step, and one `entry <name> <shape> <offset> <count>` line per array)
/// terminated by `end\n`, followed by little-endian float32 payloads in
/// manifest order. Offsets and counts are in elements. Written atomically.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace adavsr
