#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ddf {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// Forward DFT, X[k] = sum_n x[n] e^{-j2πkn/N}, no normalization.
// Power-of-two sizes run radix-2 in place; other sizes go through Bluestein.
std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x);

// Inverse DFT with 1/N normalization.
std::vector<std::complex<double>> ifft(std::vector<std::complex<double>> x);

// In-place radix-2 transform; size must be a power of two. inverse=true
// conjugates the twiddles but does NOT apply the 1/N scale.
void fft_pow2_inplace(std::vector<std::complex<double>>& x, bool inverse);

}  // namespace ddf
