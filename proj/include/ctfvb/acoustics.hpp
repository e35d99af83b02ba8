#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ctfvb/types.hpp"

namespace ctfvb {

struct AcousticsConfig {
  double start_drop_db = 5.0;   // earliest fit start, below the level at the direct peak
  double max_start_ms = 50.0;   // latest fit start after the direct peak
  double fit_drop_db = 5.0;     // fit spans this much decay from its start
  double stride_ms = 1.0;       // spacing of candidate starts
  double edc_floor_db = -120.0;
  double direct_window_ms = 2.5;
  double drr_cap_db = 80.0;
};

/// Schroeder backward integral and its level in dB relative to values[0].
struct EdcCurve {
  std::vector<double> values;
  std::vector<double> db;
};

struct LineFit {
  double slope = 0.0;  // per sample
  double intercept = 0.0;
  double pearson_r = 0.0;
};

struct Rt60Estimate {
  double rt60 = 0.0;           // seconds
  double slope_db_per_s = 0.0;
  double pearson_r = 0.0;
  std::size_t fit_start = 0;
  std::size_t fit_end = 0;
  std::size_t direct_index = 0;
};

struct DrrEstimate {
  double drr = 0.0;  // dB
  std::size_t direct_index = 0;
  bool capped = false;
};

namespace acoustics {

EdcCurve edc(const Waveform& h, double floor_db = -120.0);

/// Least-squares line through y[start..end] (inclusive) against the sample index.
LineFit fit_line(std::span<const double> y, std::size_t start, std::size_t end);

/// Line fit on the dB EDC. Candidate starts run at a fixed stride from the
/// first sample start_drop_db below the level at the direct peak to
/// max_start_ms after the peak; each fit ends at the first sample fit_drop_db
/// below its start. The fit with the largest |r| gives T60 = -60 / slope.
/// Throws "insufficient decay range" when no candidate exists.
Rt60Estimate estimate_rt60(const Waveform& h, const AcousticsConfig& cfg = {});

/// Energy within +-direct_window_ms of the peak against everything else.
/// Returns drr_cap_db when the remainder is zero or the ratio exceeds the cap.
DrrEstimate estimate_drr(const Waveform& h, const AcousticsConfig& cfg = {});

}  // namespace acoustics
}  // namespace ctfvb
