#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eegr/common.hpp"

namespace eegr {

// ---------------------------------------------------------------------------
// Patching

struct PatchSequence {
    Matrix patches;                 // P x patch_len, last patch zero-padded
    std::vector<std::size_t> valid;  // valid samples per patch
    std::size_t source_len = 0;

    // Concatenation of the unpadded samples; identical to the input.
    std::vector<double> reconstruct() const;
};

PatchSequence patchify(const std::vector<double>& x, std::size_t patch_len);

// ---------------------------------------------------------------------------
// Graph-biased attention

// softmax(QK^T/sqrt(d) + beta*B) V. B must be n x n and symmetric.
Matrix graph_attention(const Matrix& q, const Matrix& k, const Matrix& v, const Matrix& bias,
                       double beta);

// ---------------------------------------------------------------------------
// Diagonal-state linear scan

struct SsmParams {
    std::vector<double> a;  // diagonal state transition, |a_i| <= 1
    Matrix b_in;            // d_state x d_in
    Matrix c_out;           // d_out x d_state
    Matrix d_thru;          // d_out x d_in

    SsmParams(std::vector<double> a_diag, Matrix b, Matrix c, Matrix d);

    std::size_t state_dim() const { return a.size(); }
    std::size_t in_dim() const { return b_in.cols(); }
    std::size_t out_dim() const { return c_out.rows(); }
};

// x_{k+1} = a (.) x_k + B u_k ; y_k = C x_k + D u_k, single O(n) pass.
Matrix ssm_scan(const Matrix& u, const SsmParams& params);

// ---------------------------------------------------------------------------
// Losses

struct QuantileForecast {
    std::vector<double> levels;  // K non-decreasing quantile levels
    Matrix values;               // H x K, rows sorted non-decreasing
    bool crossing_resolved = false;  // set when construction had to sort rows

    static QuantileForecast make(std::vector<double> levels, Matrix values);
    static std::vector<double> default_levels();  // 0.1 .. 0.9
};

// sum_h sum_k rho_{alpha_k}(y_h - q_{alpha_k,h}), rho_a(u) = u(a - 1[u<0]).
double pinball_loss(const std::vector<double>& y, const QuantileForecast& forecast);

// sum_b |F_p(b) - F_y(b)| against the one-hot target at bin j (0-based).
double emd_loss(const std::vector<double>& p, std::size_t target_bin);

struct FocalLossResult {
    double value = 0.0;
    bool clamped = false;  // p_true hit the 1e-12 floor
};

// -alpha_w * (1 - p)^gamma * ln(p)
FocalLossResult focal_loss(double p_true, double gamma, double alpha_w);

// ---------------------------------------------------------------------------
// Desk-scale backbone: patch embedding, channel attention with a montage
// bias, diagonal SSM over the patch axis, mean-pool head.

struct BackboneConfig {
    std::size_t model_dim = 512;
    std::size_t heads = 8;
    std::size_t layers = 4;
    std::size_t coarse_patch = 64;
    std::size_t fine_patch = 256;
    double graph_bias_strength = 1.0;

    void validate() const;
};

struct AttentionLayer {
    Matrix wq, wk, wv, wo;  // d x d
};

struct SsmLayer {
    std::vector<double> a;
    Matrix b_in, c_out, d_thru;  // d x d
};

struct DetectionHead {
    std::vector<double> w;
    double b = 0.0;
};

struct BackboneWeights {
    BackboneConfig config;
    Matrix embed_coarse;  // d x coarse_patch
    Matrix embed_fine;    // d x fine_patch
    std::vector<double> embed_bias;
    std::vector<AttentionLayer> attention;  // layers alternate: attn, ssm, ...
    std::vector<SsmLayer> ssm;
    DetectionHead head;

    static BackboneWeights seeded(const BackboneConfig& cfg, std::uint64_t seed);

    void save(std::ostream& out) const;
    static BackboneWeights load(std::istream& in);
    void save_file(const std::string& path) const;
    static BackboneWeights load_file(const std::string& path);
};

// Pooled feature vector for a crop (channel-major samples at a given rate).
// use_fine_patch selects the fine (high-rate) or coarse patch size.
std::vector<double> backbone_features(const BackboneWeights& w,
                                      const std::vector<std::vector<double>>& crop,
                                      const std::vector<double>& adjacency_bias,
                                      bool use_fine_patch);

// Logistic detection probability from a feature vector.
double detect_score(const std::vector<double>& features, const DetectionHead& head);

}  // namespace eegr
