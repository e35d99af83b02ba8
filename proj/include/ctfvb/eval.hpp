#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctfvb/stft.hpp"

namespace ctfvb {

struct AcousticPair {
  double rt60 = 0.0;  // s
  double drr = 0.0;   // dB
};

struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

struct ScoreReport {
  std::vector<AcousticPair> estimates;
  std::vector<AcousticPair> truths;
  ErrorStats rt60;
  ErrorStats drr;
  double lsd = 0.0;  // dB, mean over scored spectrogram pairs (0 when none)
  std::size_t lsd_pairs = 0;
};

namespace eval {

inline constexpr double kLsdEpsilon = 1e-8;

ErrorStats error_stats(std::span<const double> estimates, std::span<const double> truths);

/// MAE and RMSE of RT60 and DRR over paired lists. Throws on an empty batch
/// or a length mismatch.
ScoreReport score_rir_batch(const std::vector<AcousticPair>& estimates, const std::vector<AcousticPair>& truths);

/// Mean over frames of the RMS over bins of the 20 log10 magnitude difference.
/// With power_match the enhanced spectrogram is first scaled to the reference
/// power.
double lsd(const Spectrogram& enhanced, const Spectrogram& reference, bool power_match = true,
           double eps = kLsdEpsilon);

std::string format_report(const ScoreReport& report);

}  // namespace eval
}  // namespace ctfvb
