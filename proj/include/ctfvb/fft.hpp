#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ctfvb/types.hpp"

namespace ctfvb {

/// Real-to-complex FFT of a fixed size, backed by FFTW. Plans are shared
/// process-wide; execution is safe from concurrent threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// in.size() == size(), out.size() == bins().
  void forward(std::span<const double> in, std::span<cplx> out) const;

  /// Inverse including the 1/n factor; in.size() == bins(), out.size() == size().
  void inverse(std::span<const cplx> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace ctfvb
