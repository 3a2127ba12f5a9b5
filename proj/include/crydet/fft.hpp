#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace crydet::dsp {

// In-place iterative radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& a);

// Magnitude spectrum of a real frame zero-padded to n_fft (power of two).
// Returns n_fft/2 + 1 values.
std::vector<double> real_magnitude_spectrum(const std::vector<double>& frame,
                                            size_t n_fft);

size_t next_pow2(size_t n);

}  // namespace crydet::dsp
