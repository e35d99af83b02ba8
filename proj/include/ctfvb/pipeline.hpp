#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "ctfvb/acoustics.hpp"
#include "ctfvb/config.hpp"
#include "ctfvb/prior.hpp"
#include "ctfvb/rir.hpp"
#include "ctfvb/vem.hpp"

namespace ctfvb {

/// Clean direct-path reference, in the same units as the observation.
struct OracleReference {
  Waveform clean;
};

/// VPRI file holding |S| on the max-abs-normalised scale of the observation.
struct PriorFile {
  std::filesystem::path path;
};

/// Magnitudes already in memory, same convention as PriorFile.
struct PriorMagnitudes {
  RealGrid magnitude;
};

using PriorSource = std::variant<OracleReference, PriorFile, PriorMagnitudes>;

struct DereverbOutput {
  Spectrogram observation;
  Waveform enhanced;  // de-normalised to the input scale, input length
  VemResult vem;
};

struct RirIdentification {
  Spectrogram observation;
  VemResult vem;
  RirEstimate rir;
  std::optional<Rt60Estimate> rt60;
  std::optional<DrrEstimate> drr;
  std::string rt60_error;  // set when rt60 is absent
  std::string drr_error;
};

namespace pipeline {

PriorPrecision build_prior(const Spectrogram& observation, const PriorSource& source, double floor);

DereverbOutput dereverb(const Waveform& input, const PriorSource& source, const PipelineConfig& cfg);

RirIdentification identify_rir(const Waveform& input, const PriorSource& source, const PipelineConfig& cfg);

}  // namespace pipeline
}  // namespace ctfvb
