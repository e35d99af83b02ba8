#include "ctfvb/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace ctfvb {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

FftwBuffer<double> alloc_real(std::size_t n) {
  return FftwBuffer<double>(fftw_alloc_real(n));
}

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto real = alloc_real(n);
  auto spec = alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  PlanPair p{fftw_plan_dft_r2c_1d(len, real.get(), spec.get(), FFTW_ESTIMATE),
             fftw_plan_dft_c2r_1d(len, spec.get(), real.get(), FFTW_ESTIMATE)};
  if (p.forward == nullptr || p.inverse == nullptr) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw Error("FFT size must be positive");
  auto p = plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<cplx> out) const {
  if (in.size() != n_ || out.size() != bins()) throw Error("RealFft::forward: size mismatch");
  auto real = alloc_real(n_);
  auto spec = alloc_complex(bins());
  std::copy(in.begin(), in.end(), real.get());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real.get(), spec.get());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {spec[k][0], spec[k][1]};
}

void RealFft::inverse(std::span<const cplx> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) throw Error("RealFft::inverse: size mismatch");
  auto real = alloc_real(n_);
  auto spec = alloc_complex(bins());
  for (std::size_t k = 0; k < bins(); ++k) {
    spec[k][0] = in[k].real();
    spec[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), spec.get(), real.get());
  const double norm = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = real[i] * norm;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  RealFft fft(n);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<cplx> fa(fft.bins()), fb(fft.bins());
  fft.forward(pa, fa);
  fft.forward(pb, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.inverse(fa, pa);
  pa.resize(out_len);
  return pa;
}

}  // namespace ctfvb
