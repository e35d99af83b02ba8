#include <doctest.h>

#include "ctfvb/acoustics.hpp"
#include "ctfvb/simulate.hpp"
#include "oracles.hpp"

using namespace ctfvb;

namespace {

double power(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / double(x.size());
}

}  // namespace

TEST_CASE("DRR at the cap gives a pure impulse") {
  SynthRirSpec s;
  s.drr = 80.0;
  s.direct_delay = 7;
  const auto h = simulate::synth_rir(s);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h.samples[i] == (i == 7 ? 1.0 : 0.0));
}

TEST_CASE("generated RIRs hit their RT60 and DRR targets") {
  std::uint64_t seed = 1;
  for (double rt : {0.3, 0.5, 0.8, 1.0})
    for (double drr : {-5.0, 0.0, 5.0, 10.0}) {
      SynthRirSpec s;
      s.rt60 = rt;
      s.drr = drr;
      s.seed = seed++;
      const auto h = simulate::synth_rir(s);
      CHECK(std::abs(acoustics::estimate_rt60(h).rt60 / rt - 1.0) < 0.05);
      CHECK(std::abs(acoustics::estimate_drr(h).drr - drr) < 0.5);
    }
}

TEST_CASE("synth_rir is deterministic in its seed") {
  SynthRirSpec s;
  s.seed = 9;
  CHECK(simulate::synth_rir(s).samples == simulate::synth_rir(s).samples);
  auto t = s;
  t.seed = 10;
  CHECK(simulate::synth_rir(s).samples != simulate::synth_rir(t).samples);
}

TEST_CASE("identity channel without noise returns the clean signal") {
  const auto s = simulate::speech_like(0.5, 16000, 1);
  const Waveform d{{1.0}, 16000};
  const auto y = simulate::mix(s, d, std::nullopt, simulate::kNoNoise);
  CHECK(y.samples == s.samples);
}

TEST_CASE("0 dB SNR balances signal and noise power") {
  const auto s = simulate::speech_like(1.0, 16000, 2);
  SynthRirSpec spec;
  spec.length = 4000;
  const auto h = simulate::synth_rir(spec);
  const auto n = simulate::white_noise(3000, 16000, 5);
  const auto clean_only = simulate::mix(s, h, std::nullopt, simulate::kNoNoise);
  const auto noisy = simulate::mix(s, h, n, 0.0);
  REQUIRE(noisy.size() == clean_only.size());
  std::vector<double> noise(noisy.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - clean_only.samples[i];
  CHECK(std::abs(10.0 * std::log10(power(clean_only.samples) / power(noise))) < 0.1);
}

TEST_CASE("mixing is linear in the clean signal") {
  const auto s = simulate::speech_like(0.5, 16000, 3);
  auto s2 = s;
  for (auto& v : s2.samples) v *= 2.0;
  SynthRirSpec spec;
  spec.length = 2000;
  const auto h = simulate::synth_rir(spec);
  const auto a = simulate::mix(s, h, std::nullopt, simulate::kNoNoise);
  const auto b = simulate::mix(s2, h, std::nullopt, simulate::kNoNoise);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.samples[i] == doctest::Approx(2.0 * a.samples[i]).epsilon(1e-12));
  const auto ref = oracle::convolve(s.samples, h.samples);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - a.samples[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("direct-path reference") {
  const auto s = simulate::speech_like(0.5, 16000, 4);
  SUBCASE("delta RIR gives the clean signal") {
    const auto r = simulate::direct_path_reference(s, Waveform{{1.0}, 16000});
    CHECK(r.samples == s.samples);
  }
  SUBCASE("scaled, delayed peak gives a scaled, delayed copy") {
    Waveform h{std::vector<double>(500, 0.0), 16000};
    h.samples[100] = 0.5;
    h.samples[300] = 0.2;
    const auto r = simulate::direct_path_reference(s, h);
    REQUIRE(r.size() == s.size() + 499);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double want = i >= 100 && i - 100 < s.size() ? 0.5 * s.samples[i - 100] : 0.0;
      CHECK(r.samples[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("speech-like source is deterministic, bounded and has pauses") {
  const auto a = simulate::speech_like(2.0, 16000, 7);
  CHECK(a.size() == 32000);
  CHECK(a.samples == simulate::speech_like(2.0, 16000, 7).samples);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(0.9));
  std::size_t quiet = 0;
  for (std::size_t i = 0; i + 160 <= a.size(); i += 160) {
    double e = 0.0;
    for (std::size_t k = 0; k < 160; ++k) e += a.samples[i + k] * a.samples[i + k];
    if (e < 1e-6) ++quiet;
  }
  CHECK(quiet > 0);
}

TEST_CASE("contract errors") {
  const Waveform silent{std::vector<double>(100, 0.0), 16000};
  CHECK_THROWS_AS(simulate::mix(silent, Waveform{{1.0}, 16000}, std::nullopt, 10.0), Error);
  const auto s = simulate::speech_like(0.2, 16000, 1);
  CHECK_THROWS_AS(simulate::mix(s, Waveform{{1.0}, 16000}, std::nullopt, 10.0), Error);
  SynthRirSpec bad;
  bad.rt60 = 0.0;
  CHECK_THROWS_AS(simulate::synth_rir(bad), Error);
}
