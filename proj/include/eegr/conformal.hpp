#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

namespace eegr {

struct ConformalConfig {
    std::size_t n_cal = 256;     // residual ring capacity
    double coverage = 0.9;       // target coverage level
    double cusum_k = 0.5;        // reference value, in baseline sigmas
    double cusum_h = 8.0;        // trigger threshold, in baseline sigmas
    std::size_t min_residuals = 10;  // below this, adjust passes through
    std::size_t baseline_warmup = 50;  // residuals used to freeze the CUSUM baseline

    void validate() const;
};

struct AdjustedQuantile {
    double value = 0.0;
    bool calibrated = false;  // false while the buffer is still cold
};

// Rolling residual store with a one-sided per-quantile adjustment and a
// two-sided CUSUM change detector on standardized residuals. Single writer;
// readers may copy snapshots freely.
class ConformalState {
public:
    explicit ConformalState(ConformalConfig cfg = {});

    // q~ = q^ + Quantile_cov({r_i}) with the order statistic at index
    // ceil((n+1) * coverage), clamped to [1, n] (higher interpolation).
    AdjustedQuantile adjust(double q_hat) const;

    // Pushes the residual y - q_hat, evicts beyond capacity, updates CUSUM.
    void observe(double y, double q_hat);

    // Clears residuals and the change statistic when triggered; returns
    // whether a recalibration actually happened. A timestamp label lands in
    // the event log either way (no-op calls record a warning instead).
    bool recalibrate_on_change(const std::string& timestamp = {});

    bool change_triggered() const { return cusum_stat() >= cfg_.cusum_h; }
    double cusum_stat() const;
    double cusum_positive() const { return cusum_pos_; }
    double cusum_negative() const { return cusum_neg_; }

    std::size_t residual_count() const { return residuals_.size(); }
    double current_adjustment() const;  // 0 while cold
    const ConformalConfig& config() const { return cfg_; }
    const std::vector<std::string>& event_log() const { return events_; }

    std::string serialize() const;             // JSON checkpoint document
    static ConformalState deserialize(const std::string& text);

private:
    friend struct ConformalStateAccess;

    ConformalConfig cfg_;
    std::deque<double> residuals_;
    double cusum_pos_ = 0.0;
    double cusum_neg_ = 0.0;
    // frozen baseline for standardization, estimated over the warmup prefix
    std::size_t baseline_n_ = 0;
    double baseline_mean_ = 0.0;
    double baseline_m2_ = 0.0;
    bool baseline_frozen_ = false;
    double baseline_sigma_ = 1.0;
    std::vector<std::string> events_;
};

}  // namespace eegr
