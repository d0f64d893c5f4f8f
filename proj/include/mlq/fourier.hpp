#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mlq/errors.hpp"

namespace mlq {

using VectorXcd = Eigen::VectorXcd;

// One uniform grid dimension with its FFT dual grid.  Point i sits at
// start + i * step; bin k carries the signed frequency 2 pi k' / (n step)
// with k' = k for k < n/2 and k - n otherwise (natural FFT order).
struct SpectralDim {
  int n = 0;
  double start = 0.0;
  double step = 1.0;

  double point(int i) const { return start + i * step; }
  double length() const { return n * step; }
  double dfreq() const { return 2.0 * M_PI / length(); }
  double freq(int k) const {
    const int kk = (k < n - n / 2) ? k : k - n;
    return dfreq() * kk;
  }
  double nyquist() const { return M_PI / step; }
};

// In-place complex FFTs (FFTW behind a plan cache; deterministic plans).
void fft_forward(std::complex<double>* data, int n);
void fft_inverse(std::complex<double>* data, int n);  // unnormalized

// Continuum-normalized transforms on a slice:
//   uhat_k = step * sum_j u_j exp(-i x_j xi_k)
//   u_j    = (dfreq/2pi) * sum_k uhat_k exp(+i x_j xi_k)
VectorXcd dft_slice(const SpectralDim& d, const VectorXcd& u);
VectorXcd idft_slice(const SpectralDim& d, const VectorXcd& uhat);

// Oscillatory quadrature sum w_i = (dfreq/2pi) sum_k v_k exp(i x_i xi_k),
// evaluated literally (O(n^2)); the serial version is the reference, the
// parallel version splits the output points over OpenMP threads and is
// bit-identical to it.
VectorXcd osc_sum_serial(const SpectralDim& d, const VectorXcd& v);
VectorXcd osc_sum_parallel(const SpectralDim& d, const VectorXcd& v);

// Spectral derivative along the slice: D u = -i du/dx via the dual grid.
VectorXcd spectral_dx(const SpectralDim& d, const VectorXcd& u);

}  // namespace mlq
