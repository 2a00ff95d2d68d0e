#include "eegr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegr/common.hpp"

#include <json.hpp>

namespace eegr {

void ConformalConfig::validate() const {
    if (n_cal < 1) throw ConfigError("conformal: n_cal must be >= 1");
    if (!(coverage > 0.0) || !(coverage < 1.0))
        throw ConfigError("conformal: coverage must lie in (0,1)");
    if (!(cusum_k >= 0.0) || !(cusum_h > 0.0)) throw ConfigError("conformal: bad CUSUM settings");
}

ConformalState::ConformalState(ConformalConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double ConformalState::current_adjustment() const {
    const std::size_t n = residuals_.size();
    if (n < cfg_.min_residuals) return 0.0;
    std::vector<double> sorted(residuals_.begin(), residuals_.end());
    std::sort(sorted.begin(), sorted.end());
    // order statistic at ceil((n+1) * coverage), clamped to [1, n]
    const double raw = std::ceil(static_cast<double>(n + 1) * cfg_.coverage);
    const std::size_t rank =
        std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, n);
    return sorted[rank - 1];
}

AdjustedQuantile ConformalState::adjust(double q_hat) const {
    AdjustedQuantile out;
    if (residuals_.size() < cfg_.min_residuals) {
        out.value = q_hat;
        out.calibrated = false;
        return out;
    }
    out.value = q_hat + current_adjustment();
    out.calibrated = true;
    return out;
}

double ConformalState::cusum_stat() const { return std::max(cusum_pos_, cusum_neg_); }

void ConformalState::observe(double y, double q_hat) {
    const double r = y - q_hat;
    residuals_.push_back(r);
    while (residuals_.size() > cfg_.n_cal) residuals_.pop_front();

    if (!baseline_frozen_) {
        ++baseline_n_;
        const double delta = r - baseline_mean_;
        baseline_mean_ += delta / static_cast<double>(baseline_n_);
        baseline_m2_ += delta * (r - baseline_mean_);
        if (baseline_n_ >= cfg_.baseline_warmup) {
            baseline_sigma_ = std::sqrt(baseline_m2_ / static_cast<double>(baseline_n_ - 1));
            if (!(baseline_sigma_ > 1e-12)) baseline_sigma_ = 1e-12;
            baseline_frozen_ = true;
        }
        return;  // no change statistic until the baseline exists
    }

    const double z = (r - baseline_mean_) / baseline_sigma_;
    cusum_pos_ = std::max(0.0, cusum_pos_ + z - cfg_.cusum_k);
    cusum_neg_ = std::max(0.0, cusum_neg_ - z - cfg_.cusum_k);
}

bool ConformalState::recalibrate_on_change(const std::string& timestamp) {
    if (!change_triggered()) {
        events_.push_back("warn: recalibrate requested without change trigger" +
                          (timestamp.empty() ? std::string() : " at " + timestamp));
        return false;
    }
    residuals_.clear();
    cusum_pos_ = cusum_neg_ = 0.0;
    baseline_n_ = 0;
    baseline_mean_ = 0.0;
    baseline_m2_ = 0.0;
    baseline_frozen_ = false;
    baseline_sigma_ = 1.0;
    events_.push_back("recalibrated" + (timestamp.empty() ? std::string() : " at " + timestamp));
    return true;
}

std::string ConformalState::serialize() const {
    nlohmann::ordered_json j;
    j["format"] = "eegr-conformal-checkpoint";
    j["version"] = 1;
    j["n_cal"] = cfg_.n_cal;
    j["coverage"] = cfg_.coverage;
    j["cusum_k"] = cfg_.cusum_k;
    j["cusum_h"] = cfg_.cusum_h;
    j["min_residuals"] = cfg_.min_residuals;
    j["baseline_warmup"] = cfg_.baseline_warmup;
    j["residuals"] = std::vector<double>(residuals_.begin(), residuals_.end());
    j["cusum_pos"] = cusum_pos_;
    j["cusum_neg"] = cusum_neg_;
    j["baseline"] = {{"n", baseline_n_},
                     {"mean", baseline_mean_},
                     {"m2", baseline_m2_},
                     {"frozen", baseline_frozen_},
                     {"sigma", baseline_sigma_}};
    j["events"] = events_;
    return j.dump(2);
}

ConformalState ConformalState::deserialize(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "eegr-conformal-checkpoint")
        throw ConfigError("conformal checkpoint: bad format tag");
    ConformalConfig cfg;
    cfg.n_cal = j.at("n_cal").get<std::size_t>();
    cfg.coverage = j.at("coverage").get<double>();
    cfg.cusum_k = j.at("cusum_k").get<double>();
    cfg.cusum_h = j.at("cusum_h").get<double>();
    cfg.min_residuals = j.at("min_residuals").get<std::size_t>();
    cfg.baseline_warmup = j.at("baseline_warmup").get<std::size_t>();

    ConformalState st(cfg);
    for (double r : j.at("residuals").get<std::vector<double>>()) st.residuals_.push_back(r);
    st.cusum_pos_ = j.at("cusum_pos").get<double>();
    st.cusum_neg_ = j.at("cusum_neg").get<double>();
    const auto& b = j.at("baseline");
    st.baseline_n_ = b.at("n").get<std::size_t>();
    st.baseline_mean_ = b.at("mean").get<double>();
    st.baseline_m2_ = b.at("m2").get<double>();
    st.baseline_frozen_ = b.at("frozen").get<bool>();
    st.baseline_sigma_ = b.at("sigma").get<double>();
    st.events_ = j.at("events").get<std::vector<std::string>>();
    return st;
}

}  // namespace eegr
