#include "ctfvb/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctfvb/fft.hpp"

namespace ctfvb {

void validate(const Waveform& wave) {
  if (wave.sample_rate <= 0) throw Error("sample rate must be positive");
  if (wave.samples.empty()) throw Error("waveform is empty");
  for (double v : wave.samples)
    if (!std::isfinite(v)) throw Error("waveform contains non-finite samples");
}

std::vector<double> StftConfig::window() const {
  std::vector<double> w(win_length);
  const double n = static_cast<double>(win_length);
  for (std::size_t i = 0; i < win_length; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  return w;
}

void StftConfig::validate() const {
  if (win_length < 2 || win_length % 2 != 0) throw Error("win_length must be even and >= 2");
  if (hop == 0 || win_length % hop != 0) throw Error("hop must divide win_length");
}

namespace stft {

std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  if (length <= cfg.win_length) return 1;
  return 1 + (length - cfg.win_length + cfg.hop - 1) / cfg.hop;
}

std::size_t synthesis_length(std::size_t frames, const StftConfig& cfg) {
  return frames == 0 ? 0 : (frames - 1) * cfg.hop + cfg.win_length;
}

Spectrogram forward(const Waveform& wave, const StftConfig& cfg, int threads) {
  cfg.validate();
  validate(wave);
  if (wave.size() < cfg.win_length) throw Error("input too short");

  const std::size_t n = cfg.win_length;
  const std::size_t frames = frame_count(wave.size(), cfg);
  const auto win = cfg.window();
  RealFft fft(n);

  Spectrogram spec;
  spec.config = cfg;
  spec.source_length = wave.size();
  spec.sample_rate = wave.sample_rate;
  spec.data = ComplexGrid(cfg.bins(), frames);

  const long long nframes = static_cast<long long>(frames);
  const int nthreads = threads > 0 ? threads : 1;
#pragma omp parallel num_threads(nthreads)
  {
    std::vector<double> buf(n);
    std::vector<cplx> out(cfg.bins());
#pragma omp for schedule(static)
    for (long long t = 0; t < nframes; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = start + i;
        buf[i] = idx < wave.size() ? wave.samples[idx] * win[i] : 0.0;
      }
      fft.forward(buf, out);
      for (std::size_t f = 0; f < out.size(); ++f) spec.data(f, static_cast<std::size_t>(t)) = out[f];
    }
  }
  return spec;
}

Spectrogram analyze_normalized(const Waveform& wave, const StftConfig& cfg, int threads) {
  validate(wave);
  double peak = 0.0;
  for (double v : wave.samples) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? peak : 1.0;
  Waveform norm{wave.samples, wave.sample_rate};
  for (double& v : norm.samples) v /= scale;
  Spectrogram spec = forward(norm, cfg, threads);
  spec.scale = scale;
  return spec;
}

Waveform inverse(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.bins() != cfg.bins()) throw Error("spectrogram bins do not match its config");

  const std::size_t n = cfg.win_length;
  const std::size_t frames = spec.frames();
  const std::size_t total = synthesis_length(frames, cfg);
  const auto win = cfg.window();
  RealFft fft(n);

  std::vector<double> acc(total, 0.0), norm(total, 0.0);
  std::vector<cplx> col(cfg.bins());
  std::vector<double> frame(n);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < col.size(); ++f) col[f] = spec.data(f, t);
    fft.inverse(col, frame);
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) {
      acc[start + i] += frame[i] * win[i];
      norm[start + i] += win[i] * win[i];
    }
  }

  // Edge samples whose window energy sum is below 1% of the interior value are
  // zeroed. Dividing there would amplify inconsistent frames by up to 1/w(n),
  // and masking keeps forward(inverse(.)) an exact projection.
  double peak_norm = 0.0;
  for (double v : norm) peak_norm = std::max(peak_norm, v);
  const double guard = peak_norm * 1e-2;

  Waveform out;
  out.sample_rate = spec.sample_rate;
  const std::size_t len = spec.source_length > 0 ? std::min(spec.source_length, total) : total;
  out.samples.resize(spec.source_length > 0 ? spec.source_length : total, 0.0);
  for (std::size_t i = 0; i < len; ++i)
    out.samples[i] = norm[i] > guard ? spec.scale * acc[i] / norm[i] : 0.0;
  return out;
}

}  // namespace stft
}  // namespace ctfvb
