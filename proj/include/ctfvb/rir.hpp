#pragma once

#include <cstddef>

#include "ctfvb/stft.hpp"
#include "ctfvb/types.hpp"
#include "ctfvb/vem.hpp"

namespace ctfvb {

/// Exponential (logarithmic) sine sweep used as the pseudo excitation.
struct SweepConfig {
  double f1 = 62.5;
  double f2 = 8000.0;
  double duration = 8.192;  // seconds
  std::size_t fade_in = 256;
  std::size_t fade_out = 128;
  int sample_rate = 16000;

  std::size_t length() const;
  void validate() const;
};

struct RirEstimate {
  Waveform waveform;
  std::size_t direct_index = 0;
  bool degenerate = false;  // all-zero filter
};

struct RirConfig {
  SweepConfig sweep;
  std::size_t crop_margin = 1024;  // samples kept on each side of the filter support
  bool zero_skipped_bands = true;
  std::size_t skip_low_bands = 3;
  int threads = 1;
};

namespace rir {

/// sin[(N w1 / ln(w2/w1)) (exp(n ln(w2/w1) / N) - 1)] with half-raised-cosine fades.
Waveform log_sweep(const SweepConfig& cfg);

/// Time-reversed sweep with a 6 dB/octave amplitude envelope, scaled so that
/// conv(sweep, inverse) peaks at exactly 1.
Waveform inverse_filter(const Waveform& sweep, const SweepConfig& cfg);

/// Sample index of the peak of conv(sweep, inverse) (the delta position).
std::size_t delta_position(const Waveform& sweep, const Waveform& inverse);

/// Pseudo measurement: the sweep's STFT is filtered band by band with the CTF,
/// resynthesised, and deconvolved with the inverse filter. The result is
/// cropped to [delta - margin, delta + (L-1) hop + win + margin).
RirEstimate ctf_to_rir(const CtfFilter& filter, const StftConfig& stft_cfg, const RirConfig& cfg);

}  // namespace rir
}  // namespace ctfvb
