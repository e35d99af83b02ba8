#include "ctfvb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ctfvb/fft.hpp"

namespace ctfvb::simulate {
namespace {

std::size_t argmax_abs(const std::vector<double>& s) {
  return static_cast<std::size_t>(
      std::max_element(s.begin(), s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) - s.begin());
}

double mean_power(std::span<const double> s) {
  double p = 0.0;
  for (double v : s) p += v * v;
  return s.empty() ? 0.0 : p / static_cast<double>(s.size());
}

// Sparse RIRs (impulses, a few reflections) are convolved directly so that
// identity channels reproduce the input exactly.
std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
  const auto nnz = static_cast<std::size_t>(std::count_if(h.begin(), h.end(), [](double v) { return v != 0.0; }));
  if (nnz > 64) return fft_convolve(x, h);
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k] == 0.0) continue;
    for (std::size_t i = 0; i < x.size(); ++i) out[i + k] += h[k] * x[i];
  }
  return out;
}

}  // namespace

Waveform synth_rir(const SynthRirSpec& spec) {
  if (!(spec.rt60 > 0.0)) throw Error("rt60 must be positive");
  if (spec.fs <= 0) throw Error("sample rate must be positive");
  const auto spread = static_cast<std::size_t>(std::llround(0.0025 * spec.fs));
  const std::size_t tail_start = spec.direct_delay + spread + 1;
  if (spec.length <= spec.direct_delay) throw Error("RIR length must exceed the direct delay");

  Waveform h{std::vector<double>(spec.length, 0.0), spec.fs};
  h.samples[spec.direct_delay] = 1.0;
  if (spec.drr >= 80.0 || tail_start >= spec.length) return h;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double decay = 3.0 * std::numbers::ln10 / (spec.fs * spec.rt60);
  // Gaussian samples renormalised to unit power in 1 ms blocks, so the energy
  // envelope (and hence the EDC) follows the exponential without sampling
  // scatter.
  const auto block = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1e-3 * spec.fs)));
  std::vector<double> noise(spec.length - tail_start);
  for (double& v : noise) v = gauss(rng);
  for (std::size_t b = 0; b < noise.size(); b += block) {
    const std::size_t e = std::min(noise.size(), b + block);
    double p = 0.0;
    for (std::size_t i = b; i < e; ++i) p += noise[i] * noise[i];
    const double norm = p > 0.0 ? std::sqrt(static_cast<double>(e - b) / p) : 0.0;
    for (std::size_t i = b; i < e; ++i) noise[i] *= norm;
  }
  double energy = 0.0;
  for (std::size_t n = tail_start; n < spec.length; ++n) {
    const double v = noise[n - tail_start] * std::exp(-decay * static_cast<double>(n - spec.direct_delay));
    h.samples[n] = v;
    energy += v * v;
  }
  const double target = std::pow(10.0, -spec.drr / 10.0);
  const double g = energy > 0.0 ? std::sqrt(target / energy) : 0.0;
  for (std::size_t n = tail_start; n < spec.length; ++n) h.samples[n] *= g;
  return h;
}

Waveform speech_like(double seconds, int fs, std::uint64_t seed) {
  if (!(seconds > 0.0) || fs <= 0) throw Error("speech_like: invalid duration or rate");
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  Waveform w{std::vector<double>(n, 0.0), fs};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };
  const double two_pi = 2.0 * std::numbers::pi;

  std::size_t pos = static_cast<std::size_t>(uni(0.02, 0.08) * fs);
  while (pos < n) {
    const auto seg = static_cast<std::size_t>(uni(0.12, 0.30) * fs);
    const std::size_t end = std::min(n, pos + seg);
    const double amp = uni(0.3, 1.0);
    if (U(rng) < 0.25) {
      for (std::size_t i = pos; i < end; ++i) {
        const double env = std::sin(std::numbers::pi * static_cast<double>(i - pos) / static_cast<double>(seg));
        w.samples[i] = 0.25 * amp * env * env * gauss(rng);
      }
    } else {
      const double f0a = uni(90.0, 220.0);
      const double f0b = f0a * uni(0.8, 1.25);
      const double formants[3] = {uni(300.0, 900.0), uni(900.0, 2500.0), uni(2500.0, 3500.0)};
      const double widths[3] = {120.0, 200.0, 300.0};
      const auto harmonics = static_cast<int>(7000.0 / std::max(f0a, f0b));
      std::vector<double> gain(static_cast<std::size_t>(harmonics) + 1, 0.0);
      std::vector<double> phase(gain.size(), 0.0);
      for (int k = 1; k <= harmonics; ++k) {
        const double fk = k * 0.5 * (f0a + f0b);
        double g = 0.1;
        for (int m = 0; m < 3; ++m) {
          const double d = (fk - formants[m]) / widths[m];
          g += std::exp(-0.5 * d * d) / (1.0 + m);
        }
        gain[static_cast<std::size_t>(k)] = g / std::pow(k, 0.7);
        phase[static_cast<std::size_t>(k)] = uni(0.0, two_pi);
      }
      double f0_phase = 0.0;
      for (std::size_t i = pos; i < end; ++i) {
        const double frac = static_cast<double>(i - pos) / static_cast<double>(seg);
        f0_phase += two_pi * (f0a + (f0b - f0a) * frac) / fs;
        const double env = std::sin(std::numbers::pi * frac);
        double v = 0.0;
        for (int k = 1; k <= harmonics; ++k)
          v += gain[static_cast<std::size_t>(k)] * std::sin(k * f0_phase + phase[static_cast<std::size_t>(k)]);
        w.samples[i] = amp * env * env * v + 0.01 * amp * env * gauss(rng);
      }
    }
    pos = end + static_cast<std::size_t>(uni(0.04, 0.15) * fs);
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : w.samples) v *= 0.9 / peak;
  return w;
}

Waveform white_noise(std::size_t length, int fs, std::uint64_t seed) {
  Waveform w{std::vector<double>(length), fs};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : w.samples) v = gauss(rng);
  return w;
}

Waveform mix(const Waveform& clean, const Waveform& rir, const std::optional<Waveform>& noise, double snr_db) {
  validate(clean);
  validate(rir);
  if (clean.sample_rate != rir.sample_rate) throw Error("mix: sample rates differ");
  Waveform out{convolve(clean.samples, rir.samples), clean.sample_rate};
  const double p_sig = mean_power(out.samples);
  if (!(p_sig > 0.0)) throw Error("mix: silent clean input, SNR undefined");
  if (std::isinf(snr_db) && snr_db > 0.0) return out;
  if (!noise) throw Error("mix: finite SNR requires a noise signal");
  validate(*noise);
  if (noise->sample_rate != clean.sample_rate) throw Error("mix: noise sample rate differs");
  std::vector<double> w(out.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = noise->samples[i % noise->size()];
  const double p_noise = mean_power(w);
  if (!(p_noise > 0.0)) throw Error("mix: silent noise");
  const double g = std::sqrt(p_sig / (p_noise * std::pow(10.0, snr_db / 10.0)));
  for (std::size_t i = 0; i < w.size(); ++i) out.samples[i] += g * w[i];
  return out;
}

Waveform direct_path_reference(const Waveform& clean, const Waveform& rir, double window_ms) {
  validate(clean);
  validate(rir);
  const std::size_t nd = argmax_abs(rir.samples);
  std::vector<double> direct(rir.size(), 0.0);
  const auto w = static_cast<std::size_t>(std::llround(window_ms * 1e-3 * rir.sample_rate));
  const std::size_t lo = nd > w ? nd - w : 0;
  const std::size_t hi = std::min(rir.size() - 1, nd + w);
  for (std::size_t i = lo; i <= hi; ++i) direct[i] = rir.samples[i];
  Waveform out{std::vector<double>(clean.size() + rir.size() - 1, 0.0), clean.sample_rate};
  for (std::size_t k = lo; k <= hi; ++k) {
    if (direct[k] == 0.0) continue;
    for (std::size_t i = 0; i < clean.size(); ++i) out.samples[i + k] += direct[k] * clean.samples[i];
  }
  return out;
}

}  // namespace ctfvb::simulate
