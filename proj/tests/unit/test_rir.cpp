#include <doctest.h>

#include <numbers>

#include "ctfvb/fft.hpp"
#include "ctfvb/rir.hpp"
#include "ctfvb/vem.hpp"
#include "oracles.hpp"

using namespace ctfvb;

namespace {

double energy_near(const std::vector<double>& s, std::size_t centre, std::size_t radius) {
  double e = 0.0;
  for (std::size_t i = centre > radius ? centre - radius : 0; i <= centre + radius && i < s.size(); ++i) e += s[i] * s[i];
  return e;
}

double energy(const std::vector<double>& s) { return energy_near(s, 0, s.size()); }

RirConfig all_bands() {
  RirConfig c;
  c.zero_skipped_bands = false;
  return c;
}

}  // namespace

TEST_CASE("sweep length, start value and phase law") {
  const SweepConfig cfg;
  const auto e = rir::log_sweep(cfg);
  REQUIRE(e.size() == 131072);
  CHECK(e.samples[0] == 0.0);
  const double N = 131072.0, k = std::log(cfg.f2 / cfg.f1), w1 = 2.0 * std::numbers::pi * cfg.f1 / 16000.0;
  auto phase = [&](double n) { return N * w1 / k * (std::exp(n * k / N) - 1.0); };
  double worst = 0.0;
  for (std::size_t n = cfg.fade_in; n + cfg.fade_out < e.size(); n += 97)
    worst = std::max(worst, std::abs(e.samples[n] - std::sin(phase(double(n)))));
  CHECK(worst < 1e-6);
  const double h = 1e-3;
  const double f_start = (phase(h) - phase(0.0)) / h / (2.0 * std::numbers::pi);
  const double f_end = (phase(N) - phase(N - h)) / h / (2.0 * std::numbers::pi);
  CHECK(std::abs(f_start / (cfg.f1 / 16000.0) - 1.0) < 5e-3);
  CHECK(std::abs(f_end / (cfg.f2 / 16000.0) - 1.0) < 5e-3);
}

TEST_CASE("inverse filter: same length, unit peak, low sidelobes") {
  const SweepConfig cfg;
  const auto e = rir::log_sweep(cfg);
  const auto v = rir::inverse_filter(e, cfg);
  CHECK(v.size() == e.size());
  const auto c = fft_convolve(e.samples, v.samples);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > std::abs(c[peak])) peak = i;
  CHECK(c[peak] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(peak == rir::delta_position(e, v));
  const std::size_t guard = 80;  // 5 ms
  double side = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (i + guard < peak || i > peak + guard) side = std::max(side, std::abs(c[i]));
  CHECK(20.0 * std::log10(side) < -40.0);
}

TEST_CASE("identity CTF reconstructs an impulse") {
  const StftConfig s;
  const auto r = rir::ctf_to_rir(CtfFilter::identity(257, 30), s, all_bands());
  CHECK_FALSE(r.degenerate);
  CHECK(r.waveform.size() == 29 * 128 + 512 + 2 * 1024);
  CHECK(r.direct_index == 1024);
  CHECK(energy_near(r.waveform.samples, r.direct_index, 2) >= 0.95 * energy(r.waveform.samples));
}

TEST_CASE("a one-frame delay moves the peak by one hop") {
  const StftConfig s;
  CtfFilter delayed{ComplexGrid(257, 4)};
  for (std::size_t f = 0; f < 257; ++f) delayed.taps(f, 1) = 1.0;
  const auto a = rir::ctf_to_rir(CtfFilter::identity(257, 4), s, all_bands());
  const auto b = rir::ctf_to_rir(delayed, s, all_bands());
  CHECK(b.direct_index == a.direct_index + 128);
}

TEST_CASE("ctf_to_rir is linear in the filter") {
  std::mt19937_64 rng(3);
  CtfFilter h{ComplexGrid(257, 6)};
  for (auto& v : h.taps.flat()) v = oracle::random_cplx(rng);
  CtfFilter h2 = h;
  for (auto& v : h2.taps.flat()) v *= -2.5;
  const auto a = rir::ctf_to_rir(h, StftConfig{}, RirConfig{});
  const auto b = rir::ctf_to_rir(h2, StftConfig{}, RirConfig{});
  double peak = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < a.waveform.size(); ++i) {
    peak = std::max(peak, std::abs(a.waveform.samples[i]));
    worst = std::max(worst, std::abs(b.waveform.samples[i] + 2.5 * a.waveform.samples[i]));
  }
  CHECK(worst < 1e-12 * peak);
}

TEST_CASE("skipped bands can be zeroed before synthesis") {
  CtfFilter h = CtfFilter::identity(257, 3);
  const auto kept = rir::ctf_to_rir(h, StftConfig{}, all_bands());
  const auto zeroed = rir::ctf_to_rir(h, StftConfig{}, RirConfig{});
  for (std::size_t f = 3; f < 257; ++f) h.taps(f, 0) = 0.0;
  const auto low_only = rir::ctf_to_rir(h, StftConfig{}, all_bands());
  for (std::size_t i = 0; i < kept.waveform.size(); ++i)
    CHECK(std::abs(kept.waveform.samples[i] - zeroed.waveform.samples[i] - low_only.waveform.samples[i]) < 1e-12);
}

TEST_CASE("all-zero filter is reported as degenerate") {
  const auto r = rir::ctf_to_rir(CtfFilter{ComplexGrid(257, 5)}, StftConfig{}, RirConfig{});
  CHECK(r.degenerate);
  CHECK(r.waveform.size() == 4 * 128 + 512 + 2048);
  for (double v : r.waveform.samples) CHECK(v == 0.0);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(rir::ctf_to_rir(CtfFilter::identity(100, 3), StftConfig{}, RirConfig{}), Error);
  CtfFilter bad = CtfFilter::identity(257, 2);
  bad.taps(5, 1) = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(rir::ctf_to_rir(bad, StftConfig{}, RirConfig{}), Error);
  SweepConfig s;
  s.f2 = 9000.0;
  CHECK_THROWS_AS(rir::log_sweep(s), Error);
}
