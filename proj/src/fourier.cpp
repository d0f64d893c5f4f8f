#include "mlq/fourier.hpp"

#include <fftw3.h>
#include <omp.h>

#include <map>
#include <mutex>

namespace mlq {

namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::pair<int, int>, fftw_plan> plans;  // (n, sign)

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<std::complex<double>> tmp(n);
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(tmp.data()),
                                   reinterpret_cast<fftw_complex*>(tmp.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans[key] = p;
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void fft_forward(std::complex<double>* data, int n) {
  fftw_plan p = cache().get(n, FFTW_FORWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

void fft_inverse(std::complex<double>* data, int n) {
  fftw_plan p = cache().get(n, FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

VectorXcd dft_slice(const SpectralDim& d, const VectorXcd& u) {
  if (static_cast<int>(u.size()) != d.n) throw ContractViolation("dft_slice: size mismatch");
  VectorXcd v = u;
  fft_forward(v.data(), d.n);
  // FFTW gives sum_j u_j e^{-2 pi i jk/n}; add the x0 phase and the measure
  for (int k = 0; k < d.n; ++k) {
    const double xi = d.freq(k);
    v(k) *= d.step * std::exp(std::complex<double>(0.0, -d.start * xi));
  }
  return v;
}

VectorXcd idft_slice(const SpectralDim& d, const VectorXcd& uhat) {
  if (static_cast<int>(uhat.size()) != d.n) throw ContractViolation("idft_slice: size mismatch");
  VectorXcd v(d.n);
  for (int k = 0; k < d.n; ++k) {
    const double xi = d.freq(k);
    v(k) = uhat(k) * std::exp(std::complex<double>(0.0, d.start * xi));
  }
  fft_inverse(v.data(), d.n);
  v /= d.length();
  return v;
}

namespace {

// core of the oscillatory sum for output points [i0, i1)
void osc_rows(const SpectralDim& d, const VectorXcd& v, int i0, int i1, VectorXcd& out) {
  const int n = d.n;
  const double dxi = d.dfreq();
  const double xi_lo = -dxi * (n / 2);  // most negative frequency
  for (int i = i0; i < i1; ++i) {
    const double x = d.point(i);
    const std::complex<double> rot = std::exp(std::complex<double>(0.0, x * dxi));
    std::complex<double> acc(0.0, 0.0);
    std::complex<double> phase(0.0, 0.0);
    // iterate in signed-frequency order so the phase recurrence is smooth;
    // resync the phasor every 256 steps to cap the drift
    for (int m = 0; m < n; ++m) {
      if (m % 256 == 0) phase = std::exp(std::complex<double>(0.0, x * (xi_lo + m * dxi)));
      const int k = (m + n / 2) % n;  // storage bin of signed index m - n/2
      acc += v(k) * phase;
      phase *= rot;
    }
    out(i) = acc * (dxi / (2.0 * M_PI));
  }
}

}  // namespace

VectorXcd osc_sum_serial(const SpectralDim& d, const VectorXcd& v) {
  if (static_cast<int>(v.size()) != d.n) throw ContractViolation("osc_sum: size mismatch");
  VectorXcd out(d.n);
  osc_rows(d, v, 0, d.n, out);
  return out;
}

VectorXcd osc_sum_parallel(const SpectralDim& d, const VectorXcd& v) {
  if (static_cast<int>(v.size()) != d.n) throw ContractViolation("osc_sum: size mismatch");
  VectorXcd out(d.n);
#pragma omp parallel
  {
    const int nt = omp_get_num_threads();
    const int id = omp_get_thread_num();
    const int chunk = (d.n + nt - 1) / nt;
    const int i0 = std::min(d.n, id * chunk);
    const int i1 = std::min(d.n, i0 + chunk);
    osc_rows(d, v, i0, i1, out);
  }
  return out;
}

VectorXcd spectral_dx(const SpectralDim& d, const VectorXcd& u) {
  VectorXcd v = u;
  fft_forward(v.data(), d.n);
  for (int k = 0; k < d.n; ++k) v(k) *= d.freq(k);
  fft_inverse(v.data(), d.n);
  v /= static_cast<double>(d.n);
  return v;
}

}  // namespace mlq
