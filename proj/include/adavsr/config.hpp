#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adavsr/adapt_infer.hpp"
#include "adavsr/degrade.hpp"
#include "adavsr/models.hpp"
#include "adavsr/train_external.hpp"

namespace adavsr {

/// Settings for the `degrade` command: a fixed task, or one drawn from the
/// task distribution when `sample` is set.
struct DegradeConfig {
  bool sample = false;
  std::uint64_t draw_index = 0;
  DegradationTask task;
};

struct AdaptConfig {
  KernelProvider::Mode provider = KernelProvider::Mode::oracle;
};

/// Toy-scale experiment layout (synthetic data and held-out evaluation).
struct ExperimentConfig {
  int videos = 200;
  int held_out = 20;
  int frames = 7;
  int size = 256;
  std::uint64_t data_seed = 1;
  /// Seed of the task distribution used for held-out degradations; it
  /// differs from the meta-training one so held-out kernels are unseen.
  std::uint64_t held_out_task_seed = 977;
  /// Seeds for the ablation (median over these).
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3};
};

struct RunConfig {
  TrainingConfig train;
  ArchitectureSpec model;
  TaskDistribution tasks;
  DegradeConfig degrade;
  AdaptConfig adapt;
  ExperimentConfig experiment;
};

/// Sets one `section.key` (or a bare key that is unique across sections).
/// Throws Error for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines grouped under `[section]` headers. `#` and `;`
/// start comments. Unknown sections or keys are errors.
RunConfig load_config(const std::filesystem::path& path);

/// Every setting as `section.key -> value` (canonical text form).
std::map<std::string, std::string> config_entries(const RunConfig& cfg);

/// Renders the config back in file form; load_config(render) round-trips.
std::string render_config(const RunConfig& cfg);

void validate(const RunConfig& cfg);

}  // namespace adavsr
