#include <doctest.h>

#include "ctfvb/acoustics.hpp"
#include "ctfvb/simulate.hpp"
#include "oracles.hpp"

using namespace ctfvb;

namespace {

Waveform impulse(std::size_t n, std::size_t at = 0) {
  Waveform w{std::vector<double>(n, 0.0), 16000};
  w.samples[at] = 1.0;
  return w;
}

Waveform exponential(double rt60, std::size_t n) {
  const double r = std::pow(10.0, -60.0 / (rt60 * 16000.0) / 20.0);
  Waveform w{std::vector<double>(n), 16000};
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = std::pow(r, double(i));
  return w;
}

// Pearson r of y[s..e] against the index, computed directly.
double pearson(const std::vector<double>& y, std::size_t s, std::size_t e) {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = s; i <= e; ++i) {
    n += 1;
    sx += double(i);
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = s; i <= e; ++i) {
    sxx += (double(i) - mx) * (double(i) - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (double(i) - mx) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("EDC of a unit impulse is a step") {
  const auto c = acoustics::edc(impulse(10));
  CHECK(c.values[0] == 1.0);
  for (std::size_t i = 1; i < 10; ++i) CHECK(c.values[i] == 0.0);
  CHECK(c.db[0] == 0.0);
  CHECK(c.db[5] == -120.0);
}

TEST_CASE("EDC(0) is the total energy") {
  const auto x = oracle::random_signal(500, 1);
  double e = 0.0;
  for (double v : x) e += v * v;
  CHECK(acoustics::edc(Waveform{x, 16000}).values[0] == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("EDC of r^n matches the closed form") {
  const double r = 0.999;
  const std::size_t n = 40000;
  Waveform w{std::vector<double>(n), 16000};
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = std::pow(r, double(i));
  const auto c = acoustics::edc(w);
  for (std::size_t i : {0u, 10u, 1000u, 5000u}) {
    const double want = std::pow(r, 2.0 * i) * (1.0 - std::pow(r, 2.0 * (n - i))) / (1.0 - r * r);
    CHECK(c.values[i] == doctest::Approx(want).epsilon(1e-9));
  }
  for (std::size_t i = 100; i < 3000; i += 100)
    CHECK(c.db[i + 1] - c.db[i] == doctest::Approx(20.0 * std::log10(r)).epsilon(1e-6));
}

TEST_CASE("straight -120 dB/s decay gives exactly 0.5 s") {
  const auto est = acoustics::estimate_rt60(exponential(0.5, 80000));
  CHECK(est.rt60 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(est.slope_db_per_s == doctest::Approx(-120.0).epsilon(1e-9));
  CHECK(est.pearson_r == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("synthetic RIR at T60 = 0.5 s is estimated within 5%") {
  SynthRirSpec spec;
  spec.rt60 = 0.5;
  spec.drr = 0.0;
  spec.seed = 3;
  const auto est = acoustics::estimate_rt60(simulate::synth_rir(spec));
  CHECK(std::abs(est.rt60 - 0.5) < 0.025);
}

TEST_CASE("two-slope decay picks the most linear admissible interval") {
  // Fast decay for 30 ms, then a slower tail with a small ripple.
  const std::size_t n = 16000;
  Waveform h{std::vector<double>(n), 16000};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / 16000.0;
    const double db = t < 0.03 ? -200.0 * t : -6.0 - 50.0 * (t - 0.03);
    h.samples[i] = std::pow(10.0, db / 20.0) * u(rng);
  }
  const AcousticsConfig cfg;
  const auto est = acoustics::estimate_rt60(h, cfg);
  const auto c = acoustics::edc(h);

  // Exhaustive search over the same admissible (start, end) pairs.
  std::size_t nd = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(h.samples[i]) > std::abs(h.samples[nd])) nd = i;
  std::size_t first = nd;
  while (c.db[first] > c.db[nd] - 5.0) ++first;
  const std::size_t last = std::max<std::size_t>(first, nd + 800);
  double best_r = 0.0;
  std::size_t best_s = 0, best_e = 0;
  for (std::size_t s = first; s <= last; s += 16) {
    std::size_t e = s;
    while (e < n && c.db[e] > c.db[s] - 5.0) ++e;
    if (e >= n) continue;
    const double r = pearson(c.db, s, e);
    if (std::abs(r) > std::abs(best_r)) {
      best_r = r;
      best_s = s;
      best_e = e;
    }
  }
  CHECK(est.fit_start == best_s);
  CHECK(est.fit_end == best_e);
  CHECK(est.pearson_r == doctest::Approx(best_r).epsilon(1e-9));
}

TEST_CASE("decay too short for a fit is reported") {
  CHECK_THROWS_WITH_AS(acoustics::estimate_rt60(impulse(100)), "insufficient decay range", Error);
}

TEST_CASE("silent response has no direct peak") {
  Waveform z{std::vector<double>(100, 0.0), 16000};
  CHECK_THROWS_AS(acoustics::estimate_rt60(z), Error);
  CHECK_THROWS_AS(acoustics::estimate_drr(z), Error);
}

TEST_CASE("DRR cases") {
  SUBCASE("single impulse is capped at 80 dB") {
    const auto d = acoustics::estimate_drr(impulse(1000, 10));
    CHECK(d.drr == 80.0);
    CHECK(d.capped);
  }
  SUBCASE("reflection of 0.5 at +10 ms gives 6.02 dB") {
    auto h = impulse(1000, 10);
    h.samples[10 + 160] = 0.5;
    CHECK(acoustics::estimate_drr(h).drr == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
  }
  SUBCASE("equal direct and tail energy gives 0 dB") {
    auto h = impulse(2000, 100);
    for (std::size_t i = 500; i < 504; ++i) h.samples[i] = 0.5;
    CHECK(std::abs(acoustics::estimate_drr(h).drr) < 1e-12);
  }
  SUBCASE("direct window spans +-2.5 ms") {
    auto h = impulse(1000, 100);
    h.samples[140] = 0.5;  // inside the window
    h.samples[141] = 0.5;  // just outside
    CHECK(acoustics::estimate_drr(h).drr == doctest::Approx(10.0 * std::log10(1.25 / 0.25)));
  }
}

TEST_CASE("fit_line recovers an exact line") {
  std::vector<double> y(50);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 3.0 - 0.25 * double(i);
  const auto f = acoustics::fit_line(y, 5, 40);
  CHECK(f.slope == doctest::Approx(-0.25));
  CHECK(f.intercept == doctest::Approx(3.0));
  CHECK(f.pearson_r == doctest::Approx(-1.0));
  CHECK_THROWS_AS(acoustics::fit_line(y, 10, 10), Error);
}
