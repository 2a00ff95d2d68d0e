#pragma once

#include <complex>
#include <vector>

namespace eegr {

// Real-input DFT helpers backed by FFTW3. Plans are cached per size behind a
// mutex; execution itself is reentrant. Returns the n/2+1 one-sided spectrum.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft for a length-n real signal (spectrum size n/2+1).
// Result is scaled by 1/n so irfft(rfft(x), n) == x.
std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n);

}  // namespace eegr
