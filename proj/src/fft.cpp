#include "ddf/fft.hpp"

#include <cmath>
#include <numbers>

#include "ddf/errors.hpp"

namespace ddf {

namespace {

using cplx = std::complex<double>;

// Chirp-z (Bluestein) DFT for arbitrary N via one power-of-two convolution.
std::vector<cplx> bluestein(const std::vector<cplx>& x, bool inverse) {
  const std::size_t n = x.size();
  const double sign = inverse ? 1.0 : -1.0;

  // w[k] = e^{sign * jπ k²/N}; k² is reduced mod 2N to keep the angle small.
  std::vector<cplx> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uintmax_t k2 = (static_cast<std::uintmax_t>(k) * k) % (2 * n);
    double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    w[k] = cplx(std::cos(angle), std::sin(angle));
  }

  std::size_t m = next_power_of_two(2 * n - 1);
  std::vector<cplx> a(m, cplx(0.0, 0.0));
  std::vector<cplx> b(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * w[k];
  b[0] = std::conj(w[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(w[k]);
    b[m - k] = std::conj(w[k]);
  }

  fft_pow2_inplace(a, false);
  fft_pow2_inplace(b, false);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  fft_pow2_inplace(a, true);

  std::vector<cplx> out(n);
  double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * w[k];
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_pow2_inplace(std::vector<cplx>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0) return;
  if (!is_power_of_two(n)) raise(Errc::invalid_params, "radix-2 FFT needs a power-of-two size");

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    cplx wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = x[i + k];
        cplx v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<cplx> fft(std::vector<cplx> x) {
  if (x.size() < 2) return x;
  if (is_power_of_two(x.size())) {
    fft_pow2_inplace(x, false);
    return x;
  }
  return bluestein(x, false);
}

std::vector<cplx> ifft(std::vector<cplx> x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  if (is_power_of_two(n)) {
    fft_pow2_inplace(x, true);
  } else {
    x = bluestein(x, true);
  }
  double scale = 1.0 / static_cast<double>(n);
  for (auto& v : x) v *= scale;
  return x;
}

}  // namespace ddf
