// Wall-clock comparison of the serial reference VEM against the optimised
// band-parallel kernels on random CTF data.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "ctfvb/vem.hpp"
#include "ctfvb/vem_reference.hpp"

using namespace ctfvb;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VEM kernel benchmark"};
  std::size_t bins = 257, frames = 500, ctf_len = 30, iters = 5;
  int reps = 3;
  std::vector<int> threads = {1, 2, 4, 8};
  app.add_option("--bins", bins, "frequency bands");
  app.add_option("--frames", frames, "STFT frames");
  app.add_option("--ctf-len", ctf_len, "CTF length");
  app.add_option("--iters", iters, "VEM iterations per run");
  app.add_option("--reps", reps, "repetitions, best time is reported");
  app.add_option("--threads", threads, "thread counts for the optimised kernels");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Spectrogram x;
  x.data = ComplexGrid(bins, frames);
  RealGrid mag(bins, frames);
  for (auto& v : x.data.flat()) v = {g(rng), g(rng)};
  for (auto& m : mag.flat()) m = std::hypot(g(rng), g(rng));
  const auto prior = prior::from_magnitude(mag);
  VemConfig cfg;
  cfg.ctf_len = ctf_len;
  cfg.max_iters = iters;

  std::printf("F=%zu T=%zu L=%zu iters=%zu reps=%d\n", bins, frames, ctf_len, iters, reps);
  VemResult ref;
  const double t_ref = best_of(reps, [&] { ref = vem::reference::run(x, prior, cfg); });
  std::printf("%-22s %10.2f ms/iter\n", "reference (serial)", 1e3 * t_ref / double(iters));
  for (int t : threads) {
    cfg.threads = t;
    VemResult opt;
    const double t_opt = best_of(reps, [&] { opt = vem::run(x, prior, cfg); });
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < opt.clean.data.size(); ++i) {
      diff = std::max(diff, std::abs(opt.clean.data.flat()[i] - ref.clean.data.flat()[i]));
      scale = std::max(scale, std::abs(ref.clean.data.flat()[i]));
    }
    char label[32];
    std::snprintf(label, sizeof label, "optimised, %d thread%s", t, t == 1 ? "" : "s");
    std::printf("%-22s %10.2f ms/iter  speedup %6.2fx  max rel diff %.1e\n", label, 1e3 * t_opt / double(iters),
                t_ref / t_opt, diff / std::max(scale, 1e-300));
  }
  return 0;
}
