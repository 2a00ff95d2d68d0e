#pragma once

#include <vector>

#include "eegr/recording.hpp"

namespace eegr {

// Second-order IIR section, direct form II transposed, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    static Biquad notch(double f0_hz, double rate_hz, double q);
    static Biquad lowpass(double f0_hz, double rate_hz);   // Butterworth Q
    static Biquad highpass(double f0_hz, double rate_hz);  // Butterworth Q

    // Steady-state DF2T state for a unit-step input (scaled by the first
    // sample when filtering), which suppresses startup transients.
    void steady_state_zi(double& z1, double& z2) const;
};

// Zero-phase application of a biquad cascade: odd-reflection padding, forward
// pass, backward pass, both with steady-state initial conditions. Linear in
// the input and phase-free, so event onsets are not shifted.
std::vector<double> filtfilt(const std::vector<Biquad>& cascade, const std::vector<double>& x);

// Notch at notch_hz (Q=30) plus bandpass as cascaded 2nd-order high/low
// sections, all applied forward-backward to every channel of every stream.
// Throws ConfigError when a cutoff reaches Nyquist of either stream.
Recording preprocess(const Recording& rec, double notch_hz, double band_lo_hz, double band_hi_hz);

}  // namespace eegr
