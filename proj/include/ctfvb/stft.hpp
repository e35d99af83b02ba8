#pragma once

#include <cstddef>
#include <vector>

#include "ctfvb/types.hpp"

namespace ctfvb {

/// Analysis/synthesis setup. The FFT size equals the window length and both
/// windows are periodic Hann.
struct StftConfig {
  std::size_t win_length = 512;
  std::size_t hop = 128;

  std::size_t fft_size() const { return win_length; }
  std::size_t bins() const { return win_length / 2 + 1; }
  std::vector<double> window() const;
  void validate() const;
};

struct Spectrogram {
  ComplexGrid data;  // bins x frames
  StftConfig config;
  double scale = 1.0;             // max-abs factor divided out of the source
  std::size_t source_length = 0;  // samples in the analysed waveform
  int sample_rate = 16000;

  std::size_t bins() const { return data.rows(); }
  std::size_t frames() const { return data.cols(); }
};

namespace stft {

/// Frames needed to cover `length` samples with left-aligned frames and a
/// zero-padded final frame.
std::size_t frame_count(std::size_t length, const StftConfig& cfg);

/// Samples produced by overlap-adding `frames` frames.
std::size_t synthesis_length(std::size_t frames, const StftConfig& cfg);

/// Plain analysis, scale = 1. Throws "input too short" below one window.
Spectrogram forward(const Waveform& wave, const StftConfig& cfg, int threads = 0);

/// Divides the waveform by its max absolute value (1 for silence) before
/// analysis and records that factor in Spectrogram::scale.
Spectrogram analyze_normalized(const Waveform& wave, const StftConfig& cfg, int threads = 0);

/// Weighted overlap-add with the Hann synthesis window, normalised by the
/// per-sample window energy sum. Output is multiplied back by spec.scale and
/// trimmed to spec.source_length when that is set.
Waveform inverse(const Spectrogram& spec);

}  // namespace stft
}  // namespace ctfvb
