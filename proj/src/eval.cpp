#include "ctfvb/eval.hpp"

#include <cmath>
#include <cstdio>

namespace ctfvb::eval {

ErrorStats error_stats(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.empty()) throw Error("cannot score an empty batch");
  if (estimates.size() != truths.size()) throw Error("estimate and truth lists differ in length");
  ErrorStats s;
  s.count = estimates.size();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truths[i];
    s.mae += std::abs(e);
    s.rmse += e * e;
  }
  s.mae /= static_cast<double>(s.count);
  s.rmse = std::sqrt(s.rmse / static_cast<double>(s.count));
  return s;
}

ScoreReport score_rir_batch(const std::vector<AcousticPair>& estimates, const std::vector<AcousticPair>& truths) {
  if (estimates.empty()) throw Error("cannot score an empty batch");
  if (estimates.size() != truths.size()) throw Error("estimate and truth lists differ in length");
  std::vector<double> er, tr, ed, td;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    er.push_back(estimates[i].rt60);
    tr.push_back(truths[i].rt60);
    ed.push_back(estimates[i].drr);
    td.push_back(truths[i].drr);
  }
  ScoreReport r;
  r.estimates = estimates;
  r.truths = truths;
  r.rt60 = error_stats(er, tr);
  r.drr = error_stats(ed, td);
  return r;
}

double lsd(const Spectrogram& enhanced, const Spectrogram& reference, bool power_match, double eps) {
  if (enhanced.bins() != reference.bins() || enhanced.frames() != reference.frames())
    throw Error("LSD: spectrogram shapes differ");
  if (reference.frames() == 0 || reference.bins() == 0) throw Error("LSD: empty spectrogram");
  double gain = 1.0;
  if (power_match) {
    double pe = 0.0, pr = 0.0;
    for (const auto& v : enhanced.data.flat()) pe += std::norm(v);
    for (const auto& v : reference.data.flat()) pr += std::norm(v);
    if (pe > 0.0) gain = std::sqrt(pr / pe);
  }
  const std::size_t F = reference.bins(), T = reference.frames();
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      const double d = 20.0 * std::log10(gain * std::abs(enhanced.data(f, t)) + eps) -
                       20.0 * std::log10(std::abs(reference.data(f, t)) + eps);
      acc += d * d;
    }
    total += std::sqrt(acc / static_cast<double>(F));
  }
  return total / static_cast<double>(T);
}

std::string format_report(const ScoreReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "items: %zu\n", r.rt60.count);
  out += buf;
  std::snprintf(buf, sizeof buf, "RT60 MAE: %.4f s  RMSE: %.4f s\n", r.rt60.mae, r.rt60.rmse);
  out += buf;
  std::snprintf(buf, sizeof buf, "DRR  MAE: %.3f dB RMSE: %.3f dB\n", r.drr.mae, r.drr.rmse);
  out += buf;
  if (r.lsd_pairs > 0) {
    std::snprintf(buf, sizeof buf, "LSD: %.3f dB over %zu pairs\n", r.lsd, r.lsd_pairs);
    out += buf;
  }
  return out;
}

}  // namespace ctfvb::eval
