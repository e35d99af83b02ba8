#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>

#include "ctfvb/types.hpp"

namespace ctfvb {

/// Parametric RIR: unit direct impulse plus an exponentially decaying
/// Gaussian tail.
struct SynthRirSpec {
  double rt60 = 0.5;  // s
  double drr = 5.0;   // dB; >= 80 gives a pure impulse
  std::size_t direct_delay = 0;
  std::size_t length = 16000;
  int fs = 16000;
  std::uint64_t seed = 0;
};

namespace simulate {

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

Waveform synth_rir(const SynthRirSpec& spec);

/// Deterministic speech-like source: voiced harmonic syllables with formant
/// shaping, some unvoiced bursts, separated by silent gaps. Peak 0.9.
Waveform speech_like(double seconds, int fs, std::uint64_t seed);

Waveform white_noise(std::size_t length, int fs, std::uint64_t seed);

/// h * s + w. The convolution keeps its full length; the noise is looped or
/// truncated to that length and scaled so the power ratio over the whole
/// output equals snr_db. snr_db = kNoNoise leaves the noise out.
Waveform mix(const Waveform& clean, const Waveform& rir, const std::optional<Waveform>& noise, double snr_db);

/// Clean convolved with only the direct-path part of the RIR: the peak sample,
/// or +-window_ms around it when window_ms > 0. Same length as mix().
Waveform direct_path_reference(const Waveform& clean, const Waveform& rir, double window_ms = 0.0);

}  // namespace simulate
}  // namespace ctfvb
