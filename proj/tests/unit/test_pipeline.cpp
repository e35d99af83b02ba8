#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "ctfvb/fft.hpp"
#include "ctfvb/pipeline.hpp"
#include "ctfvb/simulate.hpp"
#include "oracles.hpp"

using namespace ctfvb;

namespace {

// Speech-like source with everything below 250 Hz removed, so nothing falls
// in the skipped low bands, faded at both ends.
Waveform band_limited(double seconds, std::uint64_t seed) {
  Waveform s = simulate::speech_like(seconds, 16000, seed);
  std::size_t n = 1;
  while (n < s.size()) n *= 2;
  RealFft fft(n);
  std::vector<double> buf(n, 0.0);
  std::copy(s.samples.begin(), s.samples.end(), buf.begin());
  std::vector<cplx> spec(fft.bins());
  fft.forward(buf, spec);
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (double(k) * 16000.0 / double(n) < 250.0) spec[k] = 0.0;
  fft.inverse(spec, buf);
  std::copy(buf.begin(), buf.begin() + static_cast<long>(s.size()), s.samples.begin());
  for (std::size_t i = 0; i < 1024; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * double(i) / 1024.0);
    s.samples[i] *= g;
    s.samples[s.size() - 1 - i] *= g;
  }
  return s;
}

PipelineConfig quick(std::size_t iters) {
  PipelineConfig c;
  c.vem.max_iters = iters;
  return c;
}

}  // namespace

TEST_CASE("identity channel with an oracle prior reproduces the input") {
  const auto x = band_limited(1.0, 1);
  const auto out = pipeline::dereverb(x, OracleReference{x}, quick(kDereverbIters));
  REQUIRE(out.enhanced.size() == x.size());
  CHECK(oracle::rel_l2(out.enhanced.samples, x.samples, 0, x.size()) < 1e-3);
}

TEST_CASE("prior file and in-memory magnitudes drive VEM like the oracle") {
  const auto s = simulate::speech_like(1.0, 16000, 3);
  SynthRirSpec spec;
  spec.rt60 = 0.4;
  spec.length = 4000;
  const auto h = simulate::synth_rir(spec);
  const auto y = simulate::mix(s, h, simulate::white_noise(1000, 16000, 2), 25.0);
  const auto ref = simulate::direct_path_reference(s, h);
  const auto cfg = quick(5);

  const auto a = pipeline::dereverb(y, OracleReference{ref}, cfg);
  const auto x = stft::analyze_normalized(y, cfg.stft);
  std::vector<double> scaled(ref.samples.begin(), ref.samples.begin() + y.size());
  for (auto& v : scaled) v /= x.scale;
  const auto mag = prior::magnitude(stft::forward(Waveform{scaled, 16000}, cfg.stft));

  const auto b = pipeline::dereverb(y, PriorMagnitudes{mag}, cfg);
  CHECK(a.enhanced.samples == b.enhanced.samples);

  const auto path = std::filesystem::temp_directory_path() / "ctfvb_pipeline.vpri";
  prior::save_prior_file(path, mag);
  const auto c = pipeline::dereverb(y, PriorFile{path}, cfg);
  CHECK(oracle::rel_l2(c.enhanced.samples, a.enhanced.samples, 0, y.size()) < 1e-4);
  std::filesystem::remove(path);
}

TEST_CASE("prior problems are reported before inference") {
  const auto s = simulate::speech_like(1.0, 16000, 4);
  CHECK_THROWS_AS(pipeline::dereverb(s, PriorMagnitudes{RealGrid(257, 3, 1.0)}, quick(1)), Error);
  CHECK_THROWS_AS(pipeline::dereverb(s, PriorFile{"/nonexistent/p.vpri"}, quick(1)), Error);
  Waveform other_rate = s;
  other_rate.sample_rate = 8000;
  CHECK_THROWS_AS(pipeline::dereverb(other_rate, OracleReference{s}, quick(1)), Error);
}

TEST_CASE("dereverb output is identical across thread counts") {
  const auto s = simulate::speech_like(1.0, 16000, 5);
  auto cfg = quick(5);
  cfg.vem.threads = 1;
  const auto a = pipeline::dereverb(s, OracleReference{s}, cfg);
  cfg.vem.threads = 4;
  const auto b = pipeline::dereverb(s, OracleReference{s}, cfg);
  CHECK(a.enhanced.samples == b.enhanced.samples);
}

// The pseudo measurement is band-limited, so even an exact identity filter
// leaves ringing outside the direct window and the DRR stays finite.
TEST_CASE("identity channel RIR identification reports a near-impulse") {
  const auto x = band_limited(1.0, 2);
  const auto out = pipeline::identify_rir(x, OracleReference{x}, quick(kRirIters));
  CHECK_FALSE(out.rir.degenerate);
  REQUIRE(out.drr.has_value());
  CHECK(out.drr->drr > 20.0);
  if (out.rt60) {
    CHECK(out.rt60->rt60 < 0.1);
  } else {
    CHECK(out.rt60_error == "insufficient decay range");
  }
}

TEST_CASE("silent input is handled without nonfinite output") {
  const Waveform silent{std::vector<double>(8000, 0.0), 16000};
  const auto out = pipeline::dereverb(silent, OracleReference{silent}, quick(3));
  for (double v : out.enhanced.samples) CHECK(v == 0.0);
}
