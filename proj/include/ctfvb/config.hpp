#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ctfvb/acoustics.hpp"
#include "ctfvb/rir.hpp"
#include "ctfvb/stft.hpp"
#include "ctfvb/vem.hpp"

namespace ctfvb {

inline constexpr std::size_t kDereverbIters = 100;
inline constexpr std::size_t kRirIters = 300;

/// Everything a pipeline run depends on. Shared settings (band skip count,
/// worker count) live in `vem` and are copied into `rir` by synced().
struct PipelineConfig {
  StftConfig stft;
  VemConfig vem;
  RirConfig rir;
  AcousticsConfig acoustics;
  double prior_floor = kDefaultPowerFloor;
  std::uint64_t seed = 0;

  PipelineConfig();
  PipelineConfig synced() const;
  void validate() const;
};

namespace config {

/// Names accepted by set() and emitted by to_text(), in output order.
const std::vector<std::string>& keys();

void set(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// One "key = value" line per setting; doubles at round-trip precision.
std::string to_text(const PipelineConfig& cfg);

/// Applies "key = value" lines on top of cfg. Blank lines and '#' comments
/// are skipped; unknown keys and malformed values throw.
void apply_text(PipelineConfig& cfg, std::string_view text);

void apply_file(PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace config
}  // namespace ctfvb
