#include "eegr/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace eegr {
namespace {

std::mutex g_plan_mutex;

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW plans are created once per transform size and reused. FFTW_ESTIMATE
// keeps planning deterministic (no runtime measurement).
PlanPair& plans_for(std::size_t n) {
    static std::unordered_map<std::size_t, PlanPair> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    PlanPair p;
    std::vector<double> in(n);
    std::vector<fftw_complex> out(n / 2 + 1);
    p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), out.data(), in.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p.fwd || !p.bwd) throw std::runtime_error("fftw plan creation failed");
    return cache.emplace(n, p).first->second;
}

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("rfft: empty input");
    const std::size_t n = x.size();
    std::vector<double> in(x);
    std::vector<std::complex<double>> out(n / 2 + 1);

    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_plan plan = plans_for(n).fwd;
    fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
    if (n == 0 || spec.size() != n / 2 + 1)
        throw std::invalid_argument("irfft: spectrum size does not match n");
    std::vector<std::complex<double>> in(spec);
    std::vector<double> out(n);

    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_plan plan = plans_for(n).bwd;
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

}  // namespace eegr
