#include "eegr/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "eegr/common.hpp"

namespace eegr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kButterworthQ = 0.70710678118654752440;

struct SectionState {
    double z1 = 0.0, z2 = 0.0;
};

inline double step(const Biquad& s, SectionState& st, double x) {
    const double y = s.b0 * x + st.z1;
    st.z1 = s.b1 * x - s.a1 * y + st.z2;
    st.z2 = s.b2 * x - s.a2 * y;
    return y;
}

// One pass of the cascade in place, each section starting from its
// steady-state response to the signal's first sample.
void run_cascade(const std::vector<Biquad>& cascade, std::vector<double>& x) {
    if (x.empty()) return;
    for (const Biquad& s : cascade) {
        SectionState st;
        s.steady_state_zi(st.z1, st.z2);
        st.z1 *= x.front();
        st.z2 *= x.front();
        for (double& v : x) v = step(s, st, v);
    }
}

}  // namespace

Biquad Biquad::notch(double f0_hz, double rate_hz, double q) {
    const double w0 = 2.0 * kPi * f0_hz / rate_hz;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = 1.0 / a0;
    s.b1 = -2.0 * c / a0;
    s.b2 = 1.0 / a0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

Biquad Biquad::lowpass(double f0_hz, double rate_hz) {
    const double w0 = 2.0 * kPi * f0_hz / rate_hz;
    const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - c) / 2.0 / a0;
    s.b1 = (1.0 - c) / a0;
    s.b2 = (1.0 - c) / 2.0 / a0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

Biquad Biquad::highpass(double f0_hz, double rate_hz) {
    const double w0 = 2.0 * kPi * f0_hz / rate_hz;
    const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + c) / 2.0 / a0;
    s.b1 = -(1.0 + c) / a0;
    s.b2 = (1.0 + c) / 2.0 / a0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

void Biquad::steady_state_zi(double& z1, double& z2) const {
    const double denom = 1.0 + a1 + a2;
    const double k = (b0 + b1 + b2) / (denom != 0.0 ? denom : 1.0);
    z1 = k - b0;
    z2 = b2 - a2 * k;
}

std::vector<double> filtfilt(const std::vector<Biquad>& cascade, const std::vector<double>& x) {
    if (x.empty()) return {};
    if (x.size() == 1) {
        std::vector<double> y(x);
        run_cascade(cascade, y);
        std::reverse(y.begin(), y.end());
        run_cascade(cascade, y);
        std::reverse(y.begin(), y.end());
        return y;
    }

    const std::size_t n = x.size();
    const std::size_t padlen = std::min<std::size_t>(n - 1, 6 * (2 * cascade.size() + 1));

    // Odd reflection about both endpoints; the extension stays linear in x.
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x.front() - x[padlen - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x.back() - x[n - 2 - i]);

    run_cascade(cascade, ext);
    std::reverse(ext.begin(), ext.end());
    run_cascade(cascade, ext);
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
                               ext.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

Recording preprocess(const Recording& rec, double notch_hz, double band_lo_hz, double band_hi_hz) {
    rec.validate();
    const double min_rate = rec.high_rate_hz ? std::min(rec.low_rate_hz, *rec.high_rate_hz)
                                             : rec.low_rate_hz;
    const double nyquist = min_rate / 2.0;
    if (!(band_lo_hz > 0) || !(band_lo_hz < band_hi_hz) || !(band_hi_hz < nyquist))
        throw ConfigError("bandpass cutoffs must satisfy 0 < lo < hi < Nyquist");
    if (!(notch_hz > 0) || !(notch_hz < nyquist))
        throw ConfigError("notch frequency must lie below Nyquist");

    Recording out = rec;
    auto apply = [&](std::vector<std::vector<double>>& chans, double rate) {
        const std::vector<Biquad> cascade = {
            Biquad::notch(notch_hz, rate, 30.0),
            Biquad::highpass(band_lo_hz, rate),
            Biquad::lowpass(band_hi_hz, rate),
        };
        for (auto& ch : chans) ch = filtfilt(cascade, ch);
    };
    apply(out.samples_low, out.low_rate_hz);
    if (out.high_rate_hz) apply(out.samples_high, *out.high_rate_hz);

    std::ostringstream note;
    note << "preprocess: notch=" << notch_hz << "Hz q=30 band=[" << band_lo_hz << ","
         << band_hi_hz << "]Hz biquad-cascade forward-backward";
    out.processing_log.push_back(note.str());
    return out;
}

}  // namespace eegr
