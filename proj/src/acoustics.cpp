#include "ctfvb/acoustics.hpp"

#include <algorithm>
#include <cmath>

namespace ctfvb::acoustics {
namespace {

std::size_t peak_index(const Waveform& h) {
  validate(h);
  const auto& s = h.samples;
  const auto it = std::max_element(s.begin(), s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*it == 0.0) throw Error("no direct peak: impulse response is silent");
  return static_cast<std::size_t>(it - s.begin());
}

std::size_t ms_to_samples(double ms, int fs) {
  return static_cast<std::size_t>(std::llround(ms * 1e-3 * fs));
}

}  // namespace

EdcCurve edc(const Waveform& h, double floor_db) {
  if (h.samples.empty()) throw Error("EDC of an empty signal");
  const std::size_t n = h.size();
  EdcCurve c{std::vector<double>(n), std::vector<double>(n)};
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += h.samples[i] * h.samples[i];
    c.values[i] = acc;
  }
  const double total = c.values[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double db = total > 0.0 && c.values[i] > 0.0 ? 10.0 * std::log10(c.values[i] / total) : floor_db;
    c.db[i] = std::max(db, floor_db);
  }
  return c;
}

LineFit fit_line(std::span<const double> y, std::size_t start, std::size_t end) {
  if (end <= start || end >= y.size()) throw Error("fit_line: invalid range");
  const double n = static_cast<double>(end - start + 1);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = start; i <= end; ++i) {
    mx += static_cast<double>(i);
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = start; i <= end; ++i) {
    const double dx = static_cast<double>(i) - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.pearson_r = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return fit;
}

Rt60Estimate estimate_rt60(const Waveform& h, const AcousticsConfig& cfg) {
  const std::size_t nd = peak_index(h);
  const int fs = h.sample_rate;
  const EdcCurve c = edc(h, cfg.edc_floor_db);
  const std::size_t n = h.size();

  const double start_level = c.db[nd] - cfg.start_drop_db;
  std::size_t first = nd;
  while (first < n && c.db[first] > start_level) ++first;
  if (first >= n || start_level <= cfg.edc_floor_db) throw Error("insufficient decay range");
  // If the EDC is still above the start level at max_start_ms, the -5 dB
  // point is the only candidate.
  const std::size_t last = std::max(first, nd + ms_to_samples(cfg.max_start_ms, fs));
  const std::size_t stride = std::max<std::size_t>(1, ms_to_samples(cfg.stride_ms, fs));

  Rt60Estimate best;
  best.direct_index = nd;
  bool found = false;
  for (std::size_t s = first; s <= last && s < n; s += stride) {
    const double target = c.db[s] - cfg.fit_drop_db;
    if (target <= cfg.edc_floor_db) continue;
    std::size_t e = s;
    while (e < n && c.db[e] > target) ++e;
    if (e >= n || e < s + 2) continue;
    const LineFit fit = fit_line(c.db, s, e);
    if (!(fit.slope < 0.0)) continue;
    if (!found || std::abs(fit.pearson_r) > std::abs(best.pearson_r)) {
      found = true;
      best.slope_db_per_s = fit.slope * fs;
      best.rt60 = -60.0 / best.slope_db_per_s;
      best.pearson_r = fit.pearson_r;
      best.fit_start = s;
      best.fit_end = e;
    }
  }
  if (!found) throw Error("insufficient decay range");
  return best;
}

DrrEstimate estimate_drr(const Waveform& h, const AcousticsConfig& cfg) {
  const std::size_t nd = peak_index(h);
  const std::size_t w = ms_to_samples(cfg.direct_window_ms, h.sample_rate);
  const std::size_t lo = nd > w ? nd - w : 0;
  const std::size_t hi = std::min(h.size() - 1, nd + w);
  double direct = 0.0, rest = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double p = h.samples[i] * h.samples[i];
    (i >= lo && i <= hi ? direct : rest) += p;
  }
  DrrEstimate d;
  d.direct_index = nd;
  const double cap_ratio = std::pow(10.0, cfg.drr_cap_db / 10.0);
  if (rest <= 0.0 || direct >= cap_ratio * rest) {
    d.drr = cfg.drr_cap_db;
    d.capped = true;
  } else {
    d.drr = 10.0 * std::log10(direct / rest);
  }
  return d;
}

}  // namespace ctfvb::acoustics
