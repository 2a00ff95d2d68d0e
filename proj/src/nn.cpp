#include "eegr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "eegr/measurement.hpp"
#include "eegr/rng.hpp"

namespace eegr {
namespace {

void require_finite(const Matrix& m, const char* name) {
    for (double v : m.raw())
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + ": non-finite entry");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = a(i, k);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += av * b(k, j);
        }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

Matrix random_matrix(CounterRng& rng, std::size_t rows, std::size_t cols, double scale) {
    Matrix m(rows, cols);
    for (double& v : m.raw()) v = rng.uniform(-scale, scale);
    return m;
}

void write_f32_le(std::ostream& out, const std::vector<double>& values) {
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof(bits));
        unsigned char b[4] = {static_cast<unsigned char>(bits & 0xFF),
                              static_cast<unsigned char>((bits >> 8) & 0xFF),
                              static_cast<unsigned char>((bits >> 16) & 0xFF),
                              static_cast<unsigned char>((bits >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

std::vector<double> read_f32_le(std::istream& in, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw std::runtime_error("weight file: truncated tensor data");
        const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        out[i] = static_cast<double>(f);
    }
    return out;
}

struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<double>* data;
};

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> PatchSequence::reconstruct() const {
    std::vector<double> out;
    out.reserve(source_len);
    for (std::size_t p = 0; p < patches.rows(); ++p)
        for (std::size_t i = 0; i < valid[p]; ++i) out.push_back(patches(p, i));
    return out;
}

PatchSequence patchify(const std::vector<double>& x, std::size_t patch_len) {
    if (patch_len < 1) throw std::invalid_argument("patchify: patch_len must be >= 1");
    PatchSequence seq;
    seq.source_len = x.size();
    const std::size_t count = x.empty() ? 0 : (x.size() + patch_len - 1) / patch_len;
    seq.patches = Matrix(count, patch_len, 0.0);
    seq.valid.resize(count, 0);
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t i0 = p * patch_len;
        const std::size_t n = std::min(patch_len, x.size() - i0);
        seq.valid[p] = n;
        for (std::size_t i = 0; i < n; ++i) seq.patches(p, i) = x[i0 + i];
    }
    return seq;
}

Matrix graph_attention(const Matrix& q, const Matrix& k, const Matrix& v, const Matrix& bias,
                       double beta) {
    const std::size_t n = q.rows();
    const std::size_t d = q.cols();
    if (k.rows() != n || k.cols() != d || v.rows() != n)
        throw std::invalid_argument("graph_attention: shape mismatch");
    if (bias.rows() != n || bias.cols() != n)
        throw std::invalid_argument("graph_attention: bias must be n x n");
    require_finite(q, "q");
    require_finite(k, "k");
    require_finite(v, "v");
    require_finite(bias, "bias");

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix logits = matmul(q, transpose(k));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            logits(i, j) = logits(i, j) * inv_sqrt_d + beta * bias(i, j);

    Matrix out(n, v.cols(), 0.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = std::exp(logits(i, j) - mx);
            denom += row[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double a = row[j] / denom;
            for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += a * v(j, c);
        }
    }
    return out;
}

SsmParams::SsmParams(std::vector<double> a_diag, Matrix b, Matrix c, Matrix d)
    : a(std::move(a_diag)), b_in(std::move(b)), c_out(std::move(c)), d_thru(std::move(d)) {
    for (double ai : a)
        if (!(std::abs(ai) <= 1.0))
            throw std::invalid_argument("ssm: |a_i| <= 1 required for stability");
    if (b_in.rows() != a.size() || c_out.cols() != a.size())
        throw std::invalid_argument("ssm: state dimension mismatch");
    if (d_thru.rows() != c_out.rows() || d_thru.cols() != b_in.cols())
        throw std::invalid_argument("ssm: feedthrough shape mismatch");
}

Matrix ssm_scan(const Matrix& u, const SsmParams& p) {
    if (u.cols() != p.in_dim()) throw std::invalid_argument("ssm_scan: input dimension mismatch");
    const std::size_t n = u.rows();
    const std::size_t ds = p.state_dim();
    const std::size_t dout = p.out_dim();

    Matrix y(n, dout, 0.0);
    std::vector<double> state(ds, 0.0);
    std::vector<double> next(ds);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t o = 0; o < dout; ++o) {
            double acc = 0.0;
            for (std::size_t s = 0; s < ds; ++s) acc += p.c_out(o, s) * state[s];
            for (std::size_t i = 0; i < p.in_dim(); ++i) acc += p.d_thru(o, i) * u(t, i);
            y(t, o) = acc;
        }
        for (std::size_t s = 0; s < ds; ++s) {
            double acc = p.a[s] * state[s];
            for (std::size_t i = 0; i < p.in_dim(); ++i) acc += p.b_in(s, i) * u(t, i);
            next[s] = acc;
        }
        state.swap(next);
    }
    return y;
}

// ---------------------------------------------------------------------------

QuantileForecast QuantileForecast::make(std::vector<double> levels, Matrix values) {
    if (values.cols() != levels.size())
        throw std::invalid_argument("forecast: level/value width mismatch");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1])
            throw std::invalid_argument("forecast: levels must increase");
    QuantileForecast f;
    f.levels = std::move(levels);
    f.values = std::move(values);
    for (std::size_t h = 0; h < f.values.rows(); ++h) {
        double* row = f.values.data() + h * f.values.cols();
        if (!std::is_sorted(row, row + f.values.cols())) {
            std::sort(row, row + f.values.cols());
            f.crossing_resolved = true;
        }
    }
    return f;
}

std::vector<double> QuantileForecast::default_levels() {
    std::vector<double> levels(9);
    for (std::size_t i = 0; i < 9; ++i) levels[i] = 0.1 * static_cast<double>(i + 1);
    return levels;
}

double pinball_loss(const std::vector<double>& y, const QuantileForecast& forecast) {
    if (y.size() != forecast.values.rows())
        throw std::invalid_argument("pinball: horizon mismatch");
    double total = 0.0;
    for (std::size_t h = 0; h < y.size(); ++h)
        for (std::size_t k = 0; k < forecast.levels.size(); ++k) {
            const double u = y[h] - forecast.values(h, k);
            total += u * (forecast.levels[k] - (u < 0.0 ? 1.0 : 0.0));
        }
    return total;
}

double emd_loss(const std::vector<double>& p, std::size_t target_bin) {
    if (p.empty()) throw std::invalid_argument("emd: empty distribution");
    if (target_bin >= p.size()) throw std::invalid_argument("emd: target bin out of range");
    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("emd: p must sum to 1");

    double cdf = 0.0;
    double total = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        cdf += p[b];
        const double target_cdf = b >= target_bin ? 1.0 : 0.0;
        total += std::abs(cdf - target_cdf);
    }
    return total;
}

FocalLossResult focal_loss(double p_true, double gamma, double alpha_w) {
    FocalLossResult r;
    if (p_true <= 0.0) {
        p_true = 1e-12;
        r.clamped = true;
    }
    r.value = -alpha_w * std::pow(1.0 - p_true, gamma) * std::log(p_true);
    return r;
}

// ---------------------------------------------------------------------------

void BackboneConfig::validate() const {
    if (model_dim == 0 || heads == 0 || layers == 0)
        throw ConfigError("backbone: dimensions must be positive");
    if (model_dim % heads != 0) throw ConfigError("backbone: model_dim must divide by heads");
    if (coarse_patch == 0 || fine_patch == 0) throw ConfigError("backbone: patch sizes must be positive");
}

BackboneWeights BackboneWeights::seeded(const BackboneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    BackboneWeights w;
    w.config = cfg;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    CounterRng rng(seed, 0xBACC);
    w.embed_coarse = random_matrix(rng, cfg.model_dim, cfg.coarse_patch, scale);
    w.embed_fine = random_matrix(rng, cfg.model_dim, cfg.fine_patch, scale);
    w.embed_bias.resize(cfg.model_dim);
    for (double& v : w.embed_bias) v = rng.uniform(-scale, scale);

    const std::size_t attn_layers = (cfg.layers + 1) / 2;
    const std::size_t ssm_layers = cfg.layers / 2;
    for (std::size_t l = 0; l < attn_layers; ++l) {
        AttentionLayer layer;
        layer.wq = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        layer.wk = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        layer.wv = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        layer.wo = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        w.attention.push_back(std::move(layer));
    }
    for (std::size_t l = 0; l < ssm_layers; ++l) {
        SsmLayer layer;
        layer.a.resize(cfg.model_dim);
        for (double& v : layer.a) v = rng.uniform(0.5, 0.999);
        layer.b_in = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        layer.c_out = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        layer.d_thru = random_matrix(rng, cfg.model_dim, cfg.model_dim, scale);
        w.ssm.push_back(std::move(layer));
    }
    w.head.w.resize(cfg.model_dim);
    for (double& v : w.head.w) v = rng.uniform(-1.0, 1.0);
    w.head.b = rng.uniform(-0.1, 0.1);
    return w;
}

std::vector<double> backbone_features(const BackboneWeights& w,
                                      const std::vector<std::vector<double>>& crop,
                                      const std::vector<double>& adjacency_bias,
                                      bool use_fine_patch) {
    const BackboneConfig& cfg = w.config;
    const std::size_t c_count = crop.size();
    if (c_count == 0) throw std::invalid_argument("backbone: empty crop");
    if (adjacency_bias.size() != c_count * c_count)
        throw std::invalid_argument("backbone: adjacency bias size mismatch");
    const std::size_t patch_len = use_fine_patch ? cfg.fine_patch : cfg.coarse_patch;
    const Matrix& embed = use_fine_patch ? w.embed_fine : w.embed_coarse;
    const std::size_t d = cfg.model_dim;

    // robust per-channel normalization keeps logits in a sane range
    std::vector<PatchSequence> seqs;
    seqs.reserve(c_count);
    std::size_t patch_count = 0;
    for (const auto& ch : crop) {
        const double scale = std::max(robust_sigma(ch), 1e-9);
        std::vector<double> norm(ch.size());
        for (std::size_t i = 0; i < ch.size(); ++i) norm[i] = ch[i] / scale;
        seqs.push_back(patchify(norm, patch_len));
        patch_count = std::max(patch_count, seqs.back().patches.rows());
    }
    if (patch_count == 0) throw std::invalid_argument("backbone: crop too short to patch");

    // tokens[c][p] = embed * patch + bias
    std::vector<Matrix> tokens(c_count, Matrix(patch_count, d, 0.0));
    for (std::size_t c = 0; c < c_count; ++c) {
        for (std::size_t p = 0; p < seqs[c].patches.rows(); ++p)
            for (std::size_t row = 0; row < d; ++row) {
                double acc = w.embed_bias[row];
                for (std::size_t i = 0; i < patch_len; ++i)
                    acc += embed(row, i) * seqs[c].patches(p, i);
                tokens[c](p, row) = std::tanh(acc);
            }
    }

    Matrix bias(c_count, c_count);
    std::copy(adjacency_bias.begin(), adjacency_bias.end(), bias.raw().begin());

    std::size_t attn_idx = 0, ssm_idx = 0;
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        if (layer % 2 == 0 && attn_idx < w.attention.size()) {
            // attention across channels at each patch position
            const AttentionLayer& al = w.attention[attn_idx++];
            const std::size_t dh = d / cfg.heads;
            for (std::size_t p = 0; p < patch_count; ++p) {
                Matrix x(c_count, d);
                for (std::size_t c = 0; c < c_count; ++c)
                    for (std::size_t j = 0; j < d; ++j) x(c, j) = tokens[c](p, j);
                Matrix q = matmul(x, transpose(al.wq));
                Matrix k = matmul(x, transpose(al.wk));
                Matrix v = matmul(x, transpose(al.wv));
                Matrix heads_out(c_count, d, 0.0);
                for (std::size_t h = 0; h < cfg.heads; ++h) {
                    Matrix qh(c_count, dh), kh(c_count, dh), vh(c_count, dh);
                    for (std::size_t c = 0; c < c_count; ++c)
                        for (std::size_t j = 0; j < dh; ++j) {
                            qh(c, j) = q(c, h * dh + j);
                            kh(c, j) = k(c, h * dh + j);
                            vh(c, j) = v(c, h * dh + j);
                        }
                    Matrix oh = graph_attention(qh, kh, vh, bias, cfg.graph_bias_strength);
                    for (std::size_t c = 0; c < c_count; ++c)
                        for (std::size_t j = 0; j < dh; ++j) heads_out(c, h * dh + j) = oh(c, j);
                }
                Matrix mixed = matmul(heads_out, transpose(al.wo));
                for (std::size_t c = 0; c < c_count; ++c)
                    for (std::size_t j = 0; j < d; ++j)
                        tokens[c](p, j) = std::tanh(x(c, j) + mixed(c, j));
            }
        } else if (ssm_idx < w.ssm.size()) {
            // linear scan along the patch axis per channel
            const SsmLayer& sl = w.ssm[ssm_idx++];
            const SsmParams params(sl.a, sl.b_in, sl.c_out, sl.d_thru);
            for (std::size_t c = 0; c < c_count; ++c) {
                Matrix y = ssm_scan(tokens[c], params);
                for (std::size_t p = 0; p < patch_count; ++p)
                    for (std::size_t j = 0; j < d; ++j)
                        tokens[c](p, j) = std::tanh(tokens[c](p, j) + y(p, j));
            }
        }
    }

    std::vector<double> pooled(d, 0.0);
    for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t p = 0; p < patch_count; ++p)
            for (std::size_t j = 0; j < d; ++j) pooled[j] += tokens[c](p, j);
    const double inv = 1.0 / static_cast<double>(c_count * patch_count);
    for (double& v : pooled) v *= inv;
    return pooled;
}

double detect_score(const std::vector<double>& features, const DetectionHead& head) {
    if (features.size() != head.w.size())
        throw std::invalid_argument("detect_score: feature dimension mismatch");
    double acc = head.b;
    for (std::size_t i = 0; i < features.size(); ++i) acc += head.w[i] * features[i];
    return logistic(acc);
}

// ---------------------------------------------------------------------------
// Weight container: ASCII header naming each tensor and shape, then packed
// little-endian float32 in header order (grammar in docs/weight_format.md).

void BackboneWeights::save(std::ostream& out) const {
    std::vector<double> head_flat{head.b};
    std::vector<TensorRef> tensors;
    tensors.push_back({"embed.coarse", {config.model_dim, config.coarse_patch}, &embed_coarse.raw()});
    tensors.push_back({"embed.fine", {config.model_dim, config.fine_patch}, &embed_fine.raw()});
    tensors.push_back({"embed.bias", {config.model_dim}, &embed_bias});
    for (std::size_t l = 0; l < attention.size(); ++l) {
        const std::string p = "attn" + std::to_string(l);
        tensors.push_back({p + ".wq", {config.model_dim, config.model_dim}, &attention[l].wq.raw()});
        tensors.push_back({p + ".wk", {config.model_dim, config.model_dim}, &attention[l].wk.raw()});
        tensors.push_back({p + ".wv", {config.model_dim, config.model_dim}, &attention[l].wv.raw()});
        tensors.push_back({p + ".wo", {config.model_dim, config.model_dim}, &attention[l].wo.raw()});
    }
    for (std::size_t l = 0; l < ssm.size(); ++l) {
        const std::string p = "ssm" + std::to_string(l);
        tensors.push_back({p + ".a", {config.model_dim}, &ssm[l].a});
        tensors.push_back({p + ".b", {config.model_dim, config.model_dim}, &ssm[l].b_in.raw()});
        tensors.push_back({p + ".c", {config.model_dim, config.model_dim}, &ssm[l].c_out.raw()});
        tensors.push_back({p + ".d", {config.model_dim, config.model_dim}, &ssm[l].d_thru.raw()});
    }
    tensors.push_back({"head.w", {config.model_dim}, &head.w});
    tensors.push_back({"head.b", {1}, &head_flat});

    out << "EEGW 1\n";
    out << "config " << config.model_dim << " " << config.heads << " " << config.layers << " "
        << config.coarse_patch << " " << config.fine_patch << " " << config.graph_bias_strength
        << "\n";
    for (const auto& t : tensors) {
        out << "tensor " << t.name << " " << t.shape.size();
        for (std::size_t s : t.shape) out << " " << s;
        out << "\n";
    }
    out << "data\n";
    for (const auto& t : tensors) write_f32_le(out, *t.data);
}

BackboneWeights BackboneWeights::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "EEGW 1")
        throw std::runtime_error("weight file: bad magic (expected 'EEGW 1')");

    BackboneWeights w;
    struct Pending {
        std::string name;
        std::size_t count;
    };
    std::vector<Pending> pending;
    while (std::getline(in, line)) {
        if (line == "data") break;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "config") {
            ls >> w.config.model_dim >> w.config.heads >> w.config.layers >>
                w.config.coarse_patch >> w.config.fine_patch >> w.config.graph_bias_strength;
            if (!ls) throw std::runtime_error("weight file: malformed config line");
        } else if (kind == "tensor") {
            Pending p;
            std::size_t rank = 0;
            ls >> p.name >> rank;
            p.count = 1;
            for (std::size_t i = 0; i < rank; ++i) {
                std::size_t dim = 0;
                ls >> dim;
                p.count *= dim;
            }
            if (!ls) throw std::runtime_error("weight file: malformed tensor line");
            pending.push_back(std::move(p));
        } else {
            throw std::runtime_error("weight file: unknown header line: " + line);
        }
    }
    w.config.validate();

    const std::size_t d = w.config.model_dim;
    const std::size_t attn_layers = (w.config.layers + 1) / 2;
    const std::size_t ssm_layers = w.config.layers / 2;
    w.attention.resize(attn_layers);
    w.ssm.resize(ssm_layers);
    for (auto& l : w.attention) {
        l.wq = Matrix(d, d);
        l.wk = Matrix(d, d);
        l.wv = Matrix(d, d);
        l.wo = Matrix(d, d);
    }
    for (auto& l : w.ssm) {
        l.a.resize(d);
        l.b_in = Matrix(d, d);
        l.c_out = Matrix(d, d);
        l.d_thru = Matrix(d, d);
    }
    w.embed_coarse = Matrix(d, w.config.coarse_patch);
    w.embed_fine = Matrix(d, w.config.fine_patch);
    w.embed_bias.resize(d);
    w.head.w.resize(d);

    for (const auto& p : pending) {
        std::vector<double> data = read_f32_le(in, p.count);
        auto fill = [&](std::vector<double>& dst) {
            if (dst.size() != data.size())
                throw std::runtime_error("weight file: size mismatch for " + p.name);
            dst = data;
        };
        if (p.name == "embed.coarse") fill(w.embed_coarse.raw());
        else if (p.name == "embed.fine") fill(w.embed_fine.raw());
        else if (p.name == "embed.bias") fill(w.embed_bias);
        else if (p.name == "head.w") fill(w.head.w);
        else if (p.name == "head.b") w.head.b = data.at(0);
        else if (p.name.rfind("attn", 0) == 0 || p.name.rfind("ssm", 0) == 0) {
            const auto dot = p.name.find('.');
            const std::size_t digits_at = p.name.rfind("attn", 0) == 0 ? 4 : 3;
            const std::size_t idx =
                static_cast<std::size_t>(std::stoul(p.name.substr(digits_at, dot - digits_at)));
            const std::string field = p.name.substr(dot + 1);
            if (p.name.rfind("attn", 0) == 0) {
                auto& l = w.attention.at(idx);
                if (field == "wq") fill(l.wq.raw());
                else if (field == "wk") fill(l.wk.raw());
                else if (field == "wv") fill(l.wv.raw());
                else if (field == "wo") fill(l.wo.raw());
                else throw std::runtime_error("weight file: unknown tensor " + p.name);
            } else {
                auto& l = w.ssm.at(idx);
                if (field == "a") fill(l.a);
                else if (field == "b") fill(l.b_in.raw());
                else if (field == "c") fill(l.c_out.raw());
                else if (field == "d") fill(l.d_thru.raw());
                else throw std::runtime_error("weight file: unknown tensor " + p.name);
            }
        } else {
            throw std::runtime_error("weight file: unknown tensor " + p.name);
        }
    }
    return w;
}

void BackboneWeights::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open weight file for writing: " + path);
    save(out);
}

BackboneWeights BackboneWeights::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
    return load(in);
}

}  // namespace eegr
