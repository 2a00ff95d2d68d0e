#include "eegr/bandpower.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eegr/fft.hpp"

namespace eegr {

BandpowerResult bandpower_orthonormal(const std::vector<double>& x, double rate_hz,
                                      double band_lo_hz, double band_hi_hz,
                                      double keep_fraction) {
    if (x.empty()) throw std::invalid_argument("bandpower: empty window");
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
        throw std::invalid_argument("bandpower: keep_fraction outside (0,1]");
    if (!(rate_hz > 0)) throw std::invalid_argument("bandpower: rate must be positive");
    if (band_lo_hz > band_hi_hz) throw std::invalid_argument("bandpower: empty band");

    const std::size_t n = x.size();
    const auto spec = rfft(x);
    const std::size_t bins = spec.size();

    // Energy carried by each one-sided bin of the unitary transform
    // (interior bins fold in their conjugate partner).
    std::vector<double> energy(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double e = std::norm(spec[k]) / static_cast<double>(n);
        const bool interior = k != 0 && !(n % 2 == 0 && k == bins - 1);
        energy[k] = interior ? 2.0 * e : e;
    }

    std::size_t keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(bins)));
    keep = std::clamp<std::size_t>(keep, 1, bins);

    std::vector<std::size_t> order(bins);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });

    const double df = rate_hz / static_cast<double>(n);
    double band_energy = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t k = order[i];
        const double f = df * static_cast<double>(k);
        if (f >= band_lo_hz && f <= band_hi_hz) band_energy += energy[k];
    }

    BandpowerResult r;
    r.power_uv2 = band_energy / static_cast<double>(n);
    r.stored_coeff_count = keep;
    return r;
}

}  // namespace eegr
