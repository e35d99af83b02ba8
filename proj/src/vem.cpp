#include "ctfvb/vem.hpp"

#include <omp.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>

namespace ctfvb {

void VemConfig::validate() const {
  if (ctf_len < 1) throw Error("ctf_len must be >= 1");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw Error("lambda must lie in [0, 1)");
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (!(delta_cap > 0.0)) throw Error("delta_cap must be positive");
  if (!(jitter >= 0.0)) throw Error("jitter must be nonnegative");
  if (!(power_floor > 0.0)) throw Error("power_floor must be positive");
}

CtfFilter CtfFilter::identity(std::size_t bins, std::size_t length) {
  CtfFilter h{ComplexGrid(bins, length)};
  for (std::size_t f = 0; f < bins; ++f) h.taps(f, 0) = 1.0;
  return h;
}

std::vector<double> VemResult::total_loglik() const {
  std::vector<double> total(loglik.rows(), 0.0);
  for (std::size_t i = 0; i < loglik.rows(); ++i)
    for (std::size_t f = first_band; f < loglik.cols(); ++f) total[i] += loglik(i, f);
  return total;
}

namespace vem {
namespace {

using CSpan = std::span<const cplx>;
using RSpan = std::span<const double>;

void check_shapes(const Spectrogram& x, const PriorPrecision& prior) {
  if (prior.alpha.rows() != x.bins() || prior.alpha.cols() != x.frames())
    throw Error("prior shape does not match the observation spectrogram");
}

void check_state(const VemState& s, const Spectrogram& x) {
  if (s.posterior.mu.rows() != x.bins() || s.posterior.mu.cols() != x.frames() ||
      s.posterior.gamma.rows() != x.bins() || s.posterior.gamma.cols() != x.frames() ||
      s.filter.bins() != x.bins() || s.noise.delta.size() != x.bins())
    throw Error("VEM state shape does not match the observation spectrogram");
}

int worker_count(const VemConfig& cfg) { return cfg.threads > 0 ? cfg.threads : omp_get_max_threads(); }

// r(t) = x(t) - sum_l h_l mu(t - l), zero mean before frame 0.
void residual(CSpan x, CSpan h, CSpan mu, std::span<cplx> r) {
  const std::size_t T = x.size(), L = h.size();
  for (std::size_t t = 0; t < T; ++t) {
    cplx acc = x[t];
    const std::size_t lmax = std::min(L - 1, t);
    for (std::size_t l = 0; l <= lmax; ++l) acc -= h[l] * mu[t - l];
    r[t] = acc;
  }
}

// Raw update uses previous means for every other tap. Observation frames past
// the end contribute nothing.
void band_e_step(CSpan x, RSpan alpha, CSpan h, double delta, CSpan mu_pre, RSpan gamma_pre, double lambda,
                 std::span<cplx> mu_out, std::span<double> gamma_out, std::vector<cplx>& r,
                 std::vector<double>& hpow) {
  const std::size_t T = x.size(), L = h.size();
  r.resize(T);
  hpow.resize(L + 1);
  residual(x, h, mu_pre, r);
  hpow[0] = 0.0;
  for (std::size_t l = 0; l < L; ++l) hpow[l + 1] = hpow[l] + std::norm(h[l]);
  const double hnorm = hpow[L];

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t taps = std::min(L, T - t);
    cplx acc = hpow[taps] * mu_pre[t];
    for (std::size_t l = 0; l < taps; ++l) acc += std::conj(h[l]) * r[t + l];
    const double g_raw = alpha[t] + delta * hnorm;
    const cplx m_raw = delta * acc / g_raw;
    if (lambda == 0.0) {
      gamma_out[t] = g_raw;
      mu_out[t] = m_raw;
    } else if (lambda == 1.0) {
      gamma_out[t] = gamma_pre[t];
      mu_out[t] = mu_pre[t];
    } else {
      gamma_out[t] = 1.0 / (lambda / gamma_pre[t] + (1.0 - lambda) / g_raw);
      mu_out[t] = lambda * mu_pre[t] + (1.0 - lambda) * m_raw;
    }
  }
}

// Returns 1 when the ridge had to be enlarged for the Cholesky solve.
std::size_t band_m_step(CSpan x, CSpan mu, RSpan gamma, const VemConfig& cfg, std::span<cplx> h_out,
                        double& delta_out, std::vector<cplx>& r) {
  using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
  const std::size_t T = x.size(), L = h_out.size();
  const auto mu_at = [&](std::ptrdiff_t i) -> cplx {
    return i >= 0 && i < static_cast<std::ptrdiff_t>(T) ? mu[static_cast<std::size_t>(i)] : cplx{};
  };
  const auto var_at = [&](std::ptrdiff_t i) -> double {
    return i >= 0 && i < static_cast<std::ptrdiff_t>(T) ? 1.0 / gamma[static_cast<std::size_t>(i)] : 0.0;
  };
  const auto Ti = static_cast<std::ptrdiff_t>(T);

  // Cross-correlation b_l = sum_t x(t) conj(mu(t - l)).
  Vec b(static_cast<Eigen::Index>(L));
  for (std::size_t l = 0; l < L; ++l) {
    cplx acc{};
    for (std::size_t t = l; t < T; ++t) acc += x[t] * std::conj(mu[t - l]);
    b(static_cast<Eigen::Index>(l)) = acc;
  }

  // Gram R(l, l') = sum_{u=0}^{T-1-l} mu(u) conj(mu(u + l - l')) for l >= l',
  // built along each diagonal by peeling off the last term. The posterior
  // variance adds sum_{u=0}^{T-1-l} var(u) on the diagonal.
  Mat R(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  for (std::size_t k = 0; k < L; ++k) {
    cplx acc{};
    for (std::size_t u = 0; u + k < T; ++u) acc += mu[u] * std::conj(mu[u + k]);
    for (std::size_t j = 0; j + k < L; ++j) {
      const auto l = static_cast<std::ptrdiff_t>(k + j);
      if (j > 0) acc -= mu_at(Ti - l) * std::conj(mu_at(Ti - static_cast<std::ptrdiff_t>(j)));
      R(l, static_cast<Eigen::Index>(j)) = acc;
      R(static_cast<Eigen::Index>(j), l) = std::conj(acc);
    }
  }
  double var_sum = 0.0;
  for (std::size_t u = 0; u < T; ++u) var_sum += var_at(static_cast<std::ptrdiff_t>(u));
  for (std::size_t l = 0; l < L; ++l) {
    if (l > 0) var_sum -= var_at(Ti - static_cast<std::ptrdiff_t>(l));
    R(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)) += std::max(var_sum, 0.0);
  }

  // H R = b  <=>  conj(R) H^T = b^T, and conj(R) is Hermitian positive definite.
  double trace = 0.0;
  for (std::size_t l = 0; l < L; ++l) trace += R(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)).real();
  double ridge = cfg.jitter * trace / static_cast<double>(L);
  Mat A = R.conjugate();
  std::size_t warnings = 0;
  Vec h;
  for (int attempt = 0;; ++attempt) {
    Mat Ar = A;
    Ar.diagonal().array() += ridge;
    Eigen::LLT<Mat> llt(Ar);
    if (llt.info() == Eigen::Success) {
      h = llt.solve(b);
      if (h.allFinite()) break;
    }
    if (attempt == 0) warnings = 1;
    if (attempt > 20) {
      h = Vec::Zero(static_cast<Eigen::Index>(L));
      h(0) = 1.0;
      break;
    }
    ridge = std::max(ridge * 10.0, std::max(trace, 1.0) * 1e-12);
  }
  for (std::size_t l = 0; l < L; ++l) h_out[l] = h(static_cast<Eigen::Index>(l));

  // Noise precision with the updated filter.
  r.resize(T);
  residual(x, h_out, mu, r);
  double denom = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double e = std::norm(r[t]);
    const std::size_t lmax = std::min(L - 1, t);
    for (std::size_t l = 0; l <= lmax; ++l) e += std::norm(h_out[l]) / gamma[t - l];
    denom += e;
  }
  const double d = static_cast<double>(T) / denom;
  delta_out = denom > 0.0 && d < cfg.delta_cap ? d : cfg.delta_cap;
  return warnings;
}

double band_loglik(CSpan x, RSpan alpha, CSpan h, double delta, CSpan mu, RSpan gamma, std::vector<cplx>& r) {
  const std::size_t T = x.size(), L = h.size();
  r.resize(T);
  residual(x, h, mu, r);
  const double log_delta = std::log(delta);
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double e = std::norm(r[t]);
    const std::size_t lmax = std::min(L - 1, t);
    for (std::size_t l = 0; l <= lmax; ++l) e += std::norm(h[l]) / gamma[t - l];
    ll += log_delta - delta * e;
    ll += std::log(alpha[t]) - alpha[t] * (std::norm(mu[t]) + 1.0 / gamma[t]);
  }
  return ll;
}

}  // namespace

VemState init(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg) {
  cfg.validate();
  check_shapes(x, prior);
  const std::size_t F = x.bins(), T = x.frames();
  VemState s{Posterior{ComplexGrid(F, T), RealGrid(F, T)}, CtfFilter::identity(F, cfg.ctf_len),
             NoisePrecision{std::vector<double>(F)}};
  for (std::size_t f = 0; f < F; ++f) {
    double min_pow = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {
      const double p = std::max(std::norm(x.data(f, t)), cfg.power_floor);
      s.posterior.gamma(f, t) = 1.0 / p;
      min_pow = std::min(min_pow, p);
    }
    s.noise.delta[f] = std::min(1.0 / min_pow, cfg.delta_cap);
  }
  return s;
}

Posterior e_step(const VemState& state, const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg) {
  // A single step may use lambda = 1 (pure hold); run() requires lambda < 1.
  VemConfig checked = cfg;
  checked.lambda = std::min(cfg.lambda, 0.0);
  checked.validate();
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
  check_shapes(x, prior);
  check_state(state, x);
  const std::size_t F = x.bins(), T = x.frames();
  Posterior out{ComplexGrid(F, T), RealGrid(F, T)};
  const auto nf = static_cast<long long>(F);
#pragma omp parallel num_threads(worker_count(cfg))
  {
    std::vector<cplx> r;
    std::vector<double> hpow;
#pragma omp for schedule(dynamic, 1)
    for (long long fi = 0; fi < nf; ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      band_e_step(x.data.row(f), prior.alpha.row(f), state.filter.taps.row(f), state.noise.delta[f],
                  state.posterior.mu.row(f), state.posterior.gamma.row(f), cfg.lambda, out.mu.row(f),
                  out.gamma.row(f), r, hpow);
    }
  }
  return out;
}

MStepResult m_step(const VemState& state, const Spectrogram& x, const VemConfig& cfg) {
  cfg.validate();
  check_state(state, x);
  const std::size_t F = x.bins();
  const std::size_t L = state.filter.length();
  MStepResult out{NoisePrecision{std::vector<double>(F)}, CtfFilter{ComplexGrid(F, L)}, 0};
  std::vector<std::size_t> warn(F, 0);
  const auto nf = static_cast<long long>(F);
#pragma omp parallel num_threads(worker_count(cfg))
  {
    std::vector<cplx> r;
#pragma omp for schedule(dynamic, 1)
    for (long long fi = 0; fi < nf; ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      warn[f] = band_m_step(x.data.row(f), state.posterior.mu.row(f), state.posterior.gamma.row(f), cfg,
                            out.filter.taps.row(f), out.noise.delta[f], r);
    }
  }
  for (auto w : warn) out.solver_warnings += w;
  return out;
}

std::vector<double> expected_loglik(const VemState& state, const Spectrogram& x, const PriorPrecision& prior) {
  check_shapes(x, prior);
  check_state(state, x);
  std::vector<double> ll(x.bins());
  std::vector<cplx> r;
  for (std::size_t f = 0; f < x.bins(); ++f)
    ll[f] = band_loglik(x.data.row(f), prior.alpha.row(f), state.filter.taps.row(f), state.noise.delta[f],
                        state.posterior.mu.row(f), state.posterior.gamma.row(f), r);
  return ll;
}

VemResult run(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg) {
  cfg.validate();
  check_shapes(x, prior);
  const std::size_t F = x.bins(), T = x.frames(), L = cfg.ctf_len;
  const std::size_t first = std::min(cfg.skip_low_bands, F);

  VemState state = init(x, prior, cfg);

  VemResult res;
  res.clean = x;
  res.clean.data = ComplexGrid(F, T);
  res.filter = CtfFilter::identity(F, L);
  res.loglik = RealGrid(cfg.max_iters + 1, F);
  res.best_loglik = RealGrid(cfg.max_iters, F);
  res.best_iter.assign(F, 0);
  res.first_band = first;
  std::vector<std::size_t> warn(F, 0);

  const auto nf = static_cast<long long>(F);
#pragma omp parallel num_threads(worker_count(cfg))
  {
    std::vector<cplx> r, mu_next(T), best_mu(T), best_h(L);
    std::vector<double> hpow, gamma_next(T);
#pragma omp for schedule(dynamic, 1)
    for (long long fi = static_cast<long long>(first); fi < nf; ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      const CSpan xf = x.data.row(f);
      const RSpan af = prior.alpha.row(f);
      auto mu = state.posterior.mu.row(f);
      auto gamma = state.posterior.gamma.row(f);
      auto h = state.filter.taps.row(f);
      double& delta = state.noise.delta[f];

      res.loglik(0, f) = band_loglik(xf, af, h, delta, mu, gamma, r);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        band_e_step(xf, af, h, delta, mu, gamma, it == 1 ? 0.0 : cfg.lambda, mu_next, gamma_next, r, hpow);
        std::copy(mu_next.begin(), mu_next.end(), mu.begin());
        std::copy(gamma_next.begin(), gamma_next.end(), gamma.begin());
        warn[f] += band_m_step(xf, mu, gamma, cfg, h, delta, r);
        const double ll = band_loglik(xf, af, h, delta, mu, gamma, r);
        res.loglik(it, f) = ll;
        if (ll > best || res.best_iter[f] == 0) {
          best = ll;
          res.best_iter[f] = it;
          std::copy(mu.begin(), mu.end(), best_mu.begin());
          std::copy(h.begin(), h.end(), best_h.begin());
        }
        res.best_loglik(it - 1, f) = best;
      }
      std::copy(best_mu.begin(), best_mu.end(), res.clean.data.row(f).begin());
      std::copy(best_h.begin(), best_h.end(), res.filter.taps.row(f).begin());
    }
  }
  for (auto w : warn) res.solver_warnings += w;
  res.final_state = std::move(state);
  return res;
}

void write_trace_csv(const std::filesystem::path& path, const VemResult& result) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  f << "iter,band,loglik\n";
  for (std::size_t i = 0; i < result.loglik.rows(); ++i)
    for (std::size_t b = result.first_band; b < result.loglik.cols(); ++b)
      f << i << ',' << b << ',' << result.loglik(i, b) << '\n';
}

void write_filter_csv(const std::filesystem::path& path, const CtfFilter& filter) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  f << "band,tap,re,im\n";
  for (std::size_t b = 0; b < filter.bins(); ++b)
    for (std::size_t l = 0; l < filter.length(); ++l)
      f << b << ',' << l << ',' << filter.taps(b, l).real() << ',' << filter.taps(b, l).imag() << '\n';
}

}  // namespace vem
}  // namespace ctfvb
