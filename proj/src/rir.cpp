#include "ctfvb/rir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctfvb/fft.hpp"

namespace ctfvb {

std::size_t SweepConfig::length() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

void SweepConfig::validate() const {
  if (sample_rate <= 0) throw Error("sweep sample rate must be positive");
  if (!(f1 > 0.0 && f1 < f2 && f2 <= sample_rate / 2.0)) throw Error("sweep needs 0 < f1 < f2 <= fs/2");
  const double n = duration * sample_rate;
  if (!(n >= 1.0) || std::abs(n - std::round(n)) > 1e-6) throw Error("sweep duration * fs must be an integer");
  if (fade_in + fade_out > length()) throw Error("sweep fades longer than the sweep");
}

namespace rir {
namespace {

double log_ratio(const SweepConfig& cfg) { return std::log(cfg.f2 / cfg.f1); }

}  // namespace

Waveform log_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.length();
  const double Nd = static_cast<double>(N);
  const double w1 = 2.0 * std::numbers::pi * cfg.f1 / cfg.sample_rate;
  const double k = log_ratio(cfg);
  Waveform e{std::vector<double>(N), cfg.sample_rate};
  for (std::size_t n = 0; n < N; ++n)
    e.samples[n] = std::sin(Nd * w1 / k * (std::exp(static_cast<double>(n) * k / Nd) - 1.0));
  for (std::size_t n = 0; n < cfg.fade_in; ++n)
    e.samples[n] *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n) / static_cast<double>(cfg.fade_in));
  for (std::size_t n = 0; n < cfg.fade_out; ++n)
    e.samples[N - 1 - n] *=
        0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n) / static_cast<double>(cfg.fade_out));
  return e;
}

Waveform inverse_filter(const Waveform& sweep, const SweepConfig& cfg) {
  const std::size_t N = sweep.size();
  const double k = log_ratio(cfg);
  Waveform v{std::vector<double>(N), sweep.sample_rate};
  for (std::size_t n = 0; n < N; ++n)
    v.samples[n] = sweep.samples[N - 1 - n] * std::exp(-static_cast<double>(n) * k / static_cast<double>(N));
  const auto c = fft_convolve(sweep.samples, v.samples);
  const auto peak = std::max_element(c.begin(), c.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const double gain = *peak;
  for (double& s : v.samples) s /= gain;
  return v;
}

std::size_t delta_position(const Waveform& sweep, const Waveform& inverse) {
  const auto c = fft_convolve(sweep.samples, inverse.samples);
  const auto peak = std::max_element(c.begin(), c.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  return static_cast<std::size_t>(peak - c.begin());
}

RirEstimate ctf_to_rir(const CtfFilter& filter, const StftConfig& stft_cfg, const RirConfig& cfg) {
  stft_cfg.validate();
  if (filter.bins() != stft_cfg.bins()) throw Error("CTF filter band count does not match the STFT config");
  for (const auto& v : filter.taps.flat())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error("CTF filter has non-finite taps");

  const std::size_t L = filter.length();
  const std::size_t F = filter.bins();
  const std::size_t out_len = (L - 1) * stft_cfg.hop + stft_cfg.win_length + 2 * cfg.crop_margin;

  const bool all_zero = std::all_of(filter.taps.flat().begin(), filter.taps.flat().end(),
                                    [&](const cplx& v) { return v == cplx{}; });
  if (all_zero) return {Waveform{std::vector<double>(out_len, 0.0), cfg.sweep.sample_rate}, 0, true};

  const Waveform e = log_sweep(cfg.sweep);
  const Waveform v = inverse_filter(e, cfg.sweep);
  const std::size_t delta = delta_position(e, v);

  const Spectrogram E = stft::forward(e, stft_cfg, cfg.threads);
  const std::size_t Te = E.frames();
  Spectrogram Y;
  Y.config = stft_cfg;
  Y.sample_rate = cfg.sweep.sample_rate;
  Y.data = ComplexGrid(F, Te + L - 1);
  const std::size_t first = cfg.zero_skipped_bands ? std::min(cfg.skip_low_bands, F) : 0;
  const auto nf = static_cast<long long>(F);
#pragma omp parallel for schedule(static) num_threads(cfg.threads > 0 ? cfg.threads : 1)
  for (long long fi = static_cast<long long>(first); fi < nf; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    auto h = filter.taps.row(f);
    auto ef = E.data.row(f);
    auto yf = Y.data.row(f);
    for (std::size_t t = 0; t < yf.size(); ++t) {
      cplx acc{};
      for (std::size_t l = 0; l < L && l <= t; ++l)
        if (t - l < Te) acc += h[l] * ef[t - l];
      yf[t] = acc;
    }
  }
  const Waveform y = stft::inverse(Y);
  const auto h_full = fft_convolve(y.samples, v.samples);

  RirEstimate out{Waveform{std::vector<double>(out_len, 0.0), cfg.sweep.sample_rate}, 0, false};
  const long long start = static_cast<long long>(delta) - static_cast<long long>(cfg.crop_margin);
  for (std::size_t i = 0; i < out_len; ++i) {
    const long long src = start + static_cast<long long>(i);
    if (src >= 0 && src < static_cast<long long>(h_full.size())) out.waveform.samples[i] = h_full[static_cast<std::size_t>(src)];
  }
  const auto& s = out.waveform.samples;
  out.direct_index = static_cast<std::size_t>(
      std::max_element(s.begin(), s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) - s.begin());
  return out;
}

}  // namespace rir
}  // namespace ctfvb
