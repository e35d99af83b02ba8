#include "ctfvb/vem_reference.hpp"

#include <Eigen/Core>
#include <Eigen/LU>
#include <cmath>
#include <limits>

namespace ctfvb::vem::reference {
namespace {

using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using RowVec = Eigen::Matrix<cplx, 1, Eigen::Dynamic>;
using ColVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

struct Band {
  std::size_t f;
  std::size_t T;
  std::size_t L;
};

cplx mu_at(const Posterior& p, std::size_t f, long long t) {
  return t >= 0 && t < static_cast<long long>(p.mu.cols()) ? p.mu(f, static_cast<std::size_t>(t)) : cplx{};
}

double var_at(const Posterior& p, std::size_t f, long long t) {
  return t >= 0 && t < static_cast<long long>(p.gamma.cols()) ? 1.0 / p.gamma(f, static_cast<std::size_t>(t)) : 0.0;
}

// <S(f,t)> stacked as [mu(t), mu(t-1), ..., mu(t-L+1)] to pair with taps l = 0..L-1.
ColVec stacked_mean(const Posterior& p, std::size_t f, long long t, std::size_t L) {
  ColVec s(static_cast<Eigen::Index>(L));
  for (std::size_t l = 0; l < L; ++l) s(static_cast<Eigen::Index>(l)) = mu_at(p, f, t - static_cast<long long>(l));
  return s;
}

Mat second_moment(const Posterior& p, std::size_t f, long long t, std::size_t L) {
  ColVec s = stacked_mean(p, f, t, L);
  Mat m = s * s.adjoint();
  for (std::size_t l = 0; l < L; ++l)
    m(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)) += var_at(p, f, t - static_cast<long long>(l));
  return m;
}

RowVec filter_row(const CtfFilter& h, std::size_t f) {
  RowVec r(static_cast<Eigen::Index>(h.length()));
  for (std::size_t l = 0; l < h.length(); ++l) r(static_cast<Eigen::Index>(l)) = h.taps(f, l);
  return r;
}

// T / sum_t [|X|^2 - 2 Re{X^* H <S>} + H <S S^H> H^H], clamped.
double noise_precision(const Spectrogram& x, const Posterior& p, const RowVec& H, std::size_t f, const VemConfig& cfg) {
  const std::size_t T = x.frames(), L = static_cast<std::size_t>(H.size());
  double denom = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto tt = static_cast<long long>(t);
    const cplx xv = x.data(f, t);
    const cplx hs = (H * stacked_mean(p, f, tt, L))(0);
    const cplx quad = (H * second_moment(p, f, tt, L) * H.adjoint())(0, 0);
    denom += std::norm(xv) - 2.0 * std::real(std::conj(xv) * hs) + quad.real();
  }
  const double d = static_cast<double>(T) / denom;
  return denom > 0.0 && d < cfg.delta_cap ? d : cfg.delta_cap;
}

}  // namespace

Posterior e_step(const VemState& state, const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg) {
  const std::size_t F = x.bins(), T = x.frames(), L = state.filter.length();
  const Posterior& pre = state.posterior;
  Posterior out{ComplexGrid(F, T), RealGrid(F, T)};
  for (std::size_t f = 0; f < F; ++f) {
    double hnorm = 0.0;
    for (std::size_t l = 0; l < L; ++l) hnorm += std::norm(state.filter.taps(f, l));
    const double delta = state.noise.delta[f];
    for (std::size_t t = 0; t < T; ++t) {
      cplx acc{};
      for (std::size_t l = 0; l < L; ++l) {
        if (t + l >= T) continue;
        cplx inner = x.data(f, t + l);
        for (std::size_t lp = 0; lp < L; ++lp) {
          if (lp == l) continue;
          inner -= state.filter.taps(f, lp) *
                   mu_at(pre, f, static_cast<long long>(t + l) - static_cast<long long>(lp));
        }
        acc += std::conj(state.filter.taps(f, l)) * inner;
      }
      const double g_raw = prior.alpha(f, t) + delta * hnorm;
      const cplx m_raw = delta * acc / g_raw;
      const double lambda = cfg.lambda;
      out.gamma(f, t) = 1.0 / (lambda / pre.gamma(f, t) + (1.0 - lambda) / g_raw);
      out.mu(f, t) = lambda * pre.mu(f, t) + (1.0 - lambda) * m_raw;
    }
  }
  return out;
}

MStepResult m_step(const VemState& state, const Spectrogram& x, const VemConfig& cfg) {
  const std::size_t F = x.bins(), T = x.frames(), L = state.filter.length();
  const Posterior& p = state.posterior;
  MStepResult out{NoisePrecision{std::vector<double>(F)}, CtfFilter{ComplexGrid(F, L)}, 0};
  for (std::size_t f = 0; f < F; ++f) {
    RowVec num = RowVec::Zero(static_cast<Eigen::Index>(L));
    Mat gram = Mat::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t t = 0; t < T; ++t) {
      const auto tt = static_cast<long long>(t);
      num += x.data(f, t) * stacked_mean(p, f, tt, L).adjoint();
      gram += second_moment(p, f, tt, L);
    }
    const double ridge = cfg.jitter * gram.trace().real() / static_cast<double>(L);
    gram.diagonal().array() += ridge;
    // H = num * gram^{-1}, solved as gram^T H^T = num^T.
    const ColVec ht = gram.transpose().partialPivLu().solve(num.transpose());
    RowVec H = ht.transpose();
    for (std::size_t l = 0; l < L; ++l) out.filter.taps(f, l) = H(static_cast<Eigen::Index>(l));
    out.noise.delta[f] = noise_precision(x, p, H, f, cfg);
  }
  return out;
}

std::vector<double> expected_loglik(const VemState& state, const Spectrogram& x, const PriorPrecision& prior) {
  const std::size_t F = x.bins(), T = x.frames(), L = state.filter.length();
  const Posterior& p = state.posterior;
  std::vector<double> ll(F, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    const RowVec H = filter_row(state.filter, f);
    const double delta = state.noise.delta[f];
    for (std::size_t t = 0; t < T; ++t) {
      const auto tt = static_cast<long long>(t);
      const cplx xv = x.data(f, t);
      const cplx hs = (H * stacked_mean(p, f, tt, L))(0);
      const cplx quad = (H * second_moment(p, f, tt, L) * H.adjoint())(0, 0);
      const double err = std::norm(xv) - 2.0 * std::real(std::conj(xv) * hs) + quad.real();
      ll[f] += std::log(delta) - delta * err;
      const double a = prior.alpha(f, t);
      ll[f] += std::log(a) - a * (std::norm(p.mu(f, t)) + 1.0 / p.gamma(f, t));
    }
  }
  return ll;
}

VemResult run(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg) {
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

  std::vector<double> best(F, -std::numeric_limits<double>::infinity());
  auto ll0 = expected_loglik(state, x, prior);
  for (std::size_t f = first; f < F; ++f) res.loglik(0, f) = ll0[f];
  VemConfig first_cfg = cfg;
  first_cfg.lambda = 0.0;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    state.posterior = e_step(state, x, prior, it == 1 ? first_cfg : cfg);
    auto m = m_step(state, x, cfg);
    state.filter = std::move(m.filter);
    state.noise = std::move(m.noise);
    const auto ll = expected_loglik(state, x, prior);
    for (std::size_t f = first; f < F; ++f) {
      res.loglik(it, f) = ll[f];
      if (ll[f] > best[f] || res.best_iter[f] == 0) {
        best[f] = ll[f];
        res.best_iter[f] = it;
        for (std::size_t t = 0; t < T; ++t) res.clean.data(f, t) = state.posterior.mu(f, t);
        for (std::size_t l = 0; l < L; ++l) res.filter.taps(f, l) = state.filter.taps(f, l);
      }
      res.best_loglik(it - 1, f) = best[f];
    }
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace ctfvb::vem::reference
