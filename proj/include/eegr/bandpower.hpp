#pragma once

#include <cstddef>
#include <vector>

namespace eegr {

struct BandpowerResult {
    double power_uv2 = 0.0;           // mean-square power inside the band
    std::size_t stored_coeff_count = 0;
};

// Band power from unitary-DFT coefficients, keeping only the
// largest-magnitude keep_fraction of the one-sided bins. keep_fraction = 1
// reproduces the time-domain band power exactly (Parseval).
BandpowerResult bandpower_orthonormal(const std::vector<double>& x, double rate_hz,
                                      double band_lo_hz, double band_hi_hz,
                                      double keep_fraction);

}  // namespace eegr
