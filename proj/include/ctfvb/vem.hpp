#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ctfvb/prior.hpp"
#include "ctfvb/stft.hpp"
#include "ctfvb/types.hpp"

namespace ctfvb {

struct VemConfig {
  std::size_t ctf_len = 30;
  double lambda = 0.7;  // EMA weight on the previous iteration
  std::size_t max_iters = 100;
  std::size_t skip_low_bands = 3;
  double delta_cap = 1e12;
  double jitter = 1e-8;  // Gram ridge = jitter * trace / L
  double power_floor = kDefaultPowerFloor;
  int threads = 1;

  void validate() const;
};

/// Band-to-band convolutive transfer function. taps(f, l) = H_l(f); l = 0 is
/// the current-frame tap.
struct CtfFilter {
  ComplexGrid taps;  // bins x L

  std::size_t bins() const { return taps.rows(); }
  std::size_t length() const { return taps.cols(); }

  /// H_0 = 1, all other taps 0.
  static CtfFilter identity(std::size_t bins, std::size_t length);
};

struct NoisePrecision {
  std::vector<double> delta;  // per band
};

/// Mean-field posterior q(S(f,t)) = CN(mu, 1/gamma).
struct Posterior {
  ComplexGrid mu;
  RealGrid gamma;
};

struct VemState {
  Posterior posterior;
  CtfFilter filter;
  NoisePrecision noise;
};

struct MStepResult {
  NoisePrecision noise;
  CtfFilter filter;
  std::size_t solver_warnings = 0;  // Gram solves that needed extra ridge
};

struct VemResult {
  Spectrogram clean;  // MAP anechoic spectrum, best-likelihood iteration per band
  CtfFilter filter;   // filter from the same iteration
  VemState final_state;
  RealGrid loglik;       // (max_iters + 1) x bins, row 0 = initial state
  RealGrid best_loglik;  // max_iters x bins, running maximum over rows 1..
  std::vector<std::size_t> best_iter;  // per band, 1-based; 0 for skipped bands
  std::size_t first_band = 0;          // bands below are skipped
  std::size_t solver_warnings = 0;

  /// Sum over processed bands for each trace row.
  std::vector<double> total_loglik() const;
};

namespace vem {

/// Uninformative start: gamma = 1/|X|^2, mu = 0, identity filter,
/// delta = 1/min_t |X|^2 (powers floored, delta capped).
VemState init(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg);

/// Closed-form posterior update from the previous means, then EMA blending
/// with the previous posterior. Applied to every band. lambda = 1 holds the
/// posterior unchanged.
Posterior e_step(const VemState& state, const Spectrogram& x, const PriorPrecision& prior,
                 const VemConfig& cfg);

/// Least-squares filter and noise precision given the current posterior.
MStepResult m_step(const VemState& state, const Spectrogram& x, const VemConfig& cfg);

/// Expected complete-data log-likelihood per band, constants dropped.
std::vector<double> expected_loglik(const VemState& state, const Spectrogram& x, const PriorPrecision& prior);

/// Full inference: init, then max_iters rounds of E, M and likelihood, with
/// bands processed in parallel. The first E-step takes the raw update; the
/// EMA starts once a previous iteration exists. Per band the output comes from the iteration
/// with the largest likelihood. Skipped low bands output zero speech and the
/// identity filter.
VemResult run(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg);

/// CSV with columns iter,band,loglik for processed bands.
void write_trace_csv(const std::filesystem::path& path, const VemResult& result);

/// CSV with columns band,tap,re,im.
void write_filter_csv(const std::filesystem::path& path, const CtfFilter& filter);

}  // namespace vem
}  // namespace ctfvb
