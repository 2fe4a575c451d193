#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crisismine/encoder/tokenize.hpp"
#include "crisismine/encoder/vocab.hpp"
#include "crisismine/labels.hpp"
#include "crisismine/names/metrics.hpp"
#include "crisismine/util/error.hpp"
#include "crisismine/util/matrix.hpp"
#include "crisismine/util/rng.hpp"

namespace cm::encoder {

struct EncoderConfig {
    int num_layers = 2;
    int num_heads = 2;
    int model_dim = 32;
    int ff_dim = 64;
    int max_len = 48;
    int vocab_size = 0;
    int num_classes = kNumActivityLabels;
    double dropout = 0.0;

    int head_dim() const { return model_dim / num_heads; }

    void validate() const {
        if (num_layers < 1 || num_heads < 1 || model_dim < 1 || ff_dim < 1)
            throw ConfigError("encoder dimensions must be positive");
        if (model_dim % num_heads != 0)
            throw ConfigError("model_dim must be divisible by num_heads");
        if (max_len < 2) throw ConfigError("max_len must be >= 2");
        if (vocab_size < 3) throw ConfigError("vocab_size must cover reserved tokens");
        if (num_classes != kNumActivityLabels)
            throw ConfigError("classifier head expects 8 classes");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
    }
};

struct LayerParams {
    Matrix wq, wk, wv, wo;                  // d x d
    std::vector<double> bq, bk, bv, bo;     // d
    Matrix w1;                              // d x ff
    std::vector<double> b1;                 // ff
    Matrix w2;                              // ff x d
    std::vector<double> b2;                 // d
    std::vector<double> ln1_g, ln1_b, ln2_g, ln2_b;  // d
};

struct EncoderParams {
    EncoderConfig cfg;
    Matrix tok_emb;  // vocab x d
    Matrix pos_emb;  // max_len x d
    Matrix seg_emb;  // 1 x d
    std::vector<LayerParams> layers;
    Matrix wc;                // d x num_classes
    std::vector<double> bc;   // num_classes
};

inline constexpr double kLayerNormEps = 1e-12;

// Visit every parameter tensor in a fixed order; Adam, the finite-difference
// oracle, and the checkpoint format all share this traversal.
template <typename Fn>
void for_each_tensor(EncoderParams& p, Fn&& fn) {
    fn("tok_emb", p.tok_emb.data());
    fn("pos_emb", p.pos_emb.data());
    fn("seg_emb", p.seg_emb.data());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& L = p.layers[l];
        std::string pre = "layer" + std::to_string(l) + ".";
        fn(pre + "wq", L.wq.data());
        fn(pre + "bq", L.bq);
        fn(pre + "wk", L.wk.data());
        fn(pre + "bk", L.bk);
        fn(pre + "wv", L.wv.data());
        fn(pre + "bv", L.bv);
        fn(pre + "wo", L.wo.data());
        fn(pre + "bo", L.bo);
        fn(pre + "ln1_g", L.ln1_g);
        fn(pre + "ln1_b", L.ln1_b);
        fn(pre + "w1", L.w1.data());
        fn(pre + "b1", L.b1);
        fn(pre + "w2", L.w2.data());
        fn(pre + "b2", L.b2);
        fn(pre + "ln2_g", L.ln2_g);
        fn(pre + "ln2_b", L.ln2_b);
    }
    fn("wc", p.wc.data());
    fn("bc", p.bc);
}

inline EncoderParams zeros_like_params(const EncoderConfig& cfg) {
    EncoderParams p;
    p.cfg = cfg;
    int d = cfg.model_dim;
    p.tok_emb = Matrix(cfg.vocab_size, d);
    p.pos_emb = Matrix(cfg.max_len, d);
    p.seg_emb = Matrix(1, d);
    p.layers.resize(cfg.num_layers);
    for (auto& L : p.layers) {
        L.wq = L.wk = L.wv = L.wo = Matrix(d, d);
        L.bq = L.bk = L.bv = L.bo = std::vector<double>(d, 0.0);
        L.w1 = Matrix(d, cfg.ff_dim);
        L.b1 = std::vector<double>(cfg.ff_dim, 0.0);
        L.w2 = Matrix(cfg.ff_dim, d);
        L.b2 = std::vector<double>(d, 0.0);
        L.ln1_g = L.ln2_g = std::vector<double>(d, 0.0);
        L.ln1_b = L.ln2_b = std::vector<double>(d, 0.0);
    }
    p.wc = Matrix(d, cfg.num_classes);
    p.bc = std::vector<double>(cfg.num_classes, 0.0);
    return p;
}

// Truncated normal (sigma 0.02) weights, zero biases and layer-norm shift,
// unit layer-norm scale.
inline EncoderParams init_params(const EncoderConfig& cfg, Rng rng) {
    cfg.validate();
    EncoderParams p = zeros_like_params(cfg);
    auto fill = [&](std::vector<double>& v) {
        for (double& x : v) x = rng.truncated_normal(0.02);
    };
    fill(p.tok_emb.data());
    fill(p.pos_emb.data());
    fill(p.seg_emb.data());
    for (auto& L : p.layers) {
        fill(L.wq.data());
        fill(L.wk.data());
        fill(L.wv.data());
        fill(L.wo.data());
        fill(L.w1.data());
        fill(L.w2.data());
        std::fill(L.ln1_g.begin(), L.ln1_g.end(), 1.0);
        std::fill(L.ln2_g.begin(), L.ln2_g.end(), 1.0);
    }
    fill(p.wc.data());
    return p;
}

namespace detail {

inline void softmax_row_inplace(std::vector<double>& row) {
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : row) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : row) v /= z;
}

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * 0.7071067811865475244)) +
           x * std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

struct LayerNormCache {
    std::vector<double> invstd;  // per row
    Matrix xhat;
};

inline Matrix layer_norm(const Matrix& x, const std::vector<double>& g,
                         const std::vector<double>& b, LayerNormCache& cache) {
    std::size_t n = x.rows(), d = x.cols();
    Matrix out(n, d);
    cache.invstd.resize(n);
    cache.xhat = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = x(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.invstd[i] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (x(i, j) - mean) * inv;
            cache.xhat(i, j) = xh;
            out(i, j) = g[j] * xh + b[j];
        }
    }
    return out;
}

inline Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache,
                                  const std::vector<double>& g,
                                  std::vector<double>& dg, std::vector<double>& db) {
    std::size_t n = dy.rows(), d = dy.cols();
    Matrix dx(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double dxhat = dy(i, j) * g[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * cache.xhat(i, j);
            dg[j] += dy(i, j) * cache.xhat(i, j);
            db[j] += dy(i, j);
        }
        double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            double dxhat = dy(i, j) * g[j];
            dx(i, j) = cache.invstd[i] *
                       (dxhat - sum_dxhat * inv_d - cache.xhat(i, j) * sum_dxhat_xhat * inv_d);
        }
    }
    return dx;
}

struct LayerCache {
    Matrix x_in;         // layer input
    Matrix q, k, v;      // n x d
    std::vector<Matrix> attn;  // per head, n x n
    Matrix concat;       // n x d, heads concatenated
    Matrix proj_drop_mask;     // empty when dropout off
    LayerNormCache ln1;
    Matrix h1;
    Matrix f1;           // pre-activation
    Matrix act;          // gelu(f1)
    Matrix ff_drop_mask;
    LayerNormCache ln2;
};

struct ForwardCache {
    Matrix x0;
    std::vector<LayerCache> layers;
    std::vector<double> cls_state;  // final hidden at position 0
    std::vector<double> probs;
};

}  // namespace detail

// Scaled dot-product attention, standalone (single head). mask[j] = 1 marks
// valid key positions; masked scores go to -inf before the softmax. When
// `weights_out` is non-null the attention rows are copied there.
inline Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v,
                        const std::vector<int>& mask, Matrix* weights_out = nullptr) {
    std::size_t n = q.rows();
    if (n == 0) return Matrix(0, v.cols());
    if (k.rows() != n || v.rows() != n || q.cols() != k.cols() || mask.size() != n)
        throw NumericError("attention shape mismatch");
    bool any_valid = false;
    for (int m : mask) any_valid |= (m != 0);
    if (!any_valid) throw NumericError("attention: all key positions masked");
    double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix out(n, v.cols());
    if (weights_out) *weights_out = Matrix(n, n);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!mask[j]) { row[j] = -std::numeric_limits<double>::infinity(); continue; }
            double s = 0.0;
            for (std::size_t c = 0; c < q.cols(); ++c) s += q(i, c) * k(j, c);
            row[j] = s * scale;
            mx = std::max(mx, row[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = mask[j] ? std::exp(row[j] - mx) : 0.0;
            z += row[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            double a = row[j] / z;
            if (weights_out) (*weights_out)(i, j) = a;
            for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += a * v(j, c);
        }
    }
    return out;
}

namespace detail {

inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out = matmul(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b[j];
    return out;
}

inline void check_finite(const Matrix& m, int layer, const char* what) {
    if (!m.all_finite())
        throw NumericError(std::string("non-finite activation in ") + what +
                           " at layer " + std::to_string(layer));
}

inline Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Matrix mask(rows, cols);
    double keep = 1.0 - rate;
    for (double& v : mask.data()) v = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
    return mask;
}

}  // namespace detail

// Full forward pass; dropout applies only when `train_rng` is non-null.
inline std::vector<double> encode_and_classify(const EncoderParams& p,
                                               const TokenSequence& seq,
                                               detail::ForwardCache* cache = nullptr,
                                               Rng* train_rng = nullptr) {
    const EncoderConfig& cfg = p.cfg;
    std::size_t n = static_cast<std::size_t>(cfg.max_len);
    int d = cfg.model_dim;
    int H = cfg.num_heads;
    int dk = cfg.head_dim();
    if (seq.ids.size() != n || seq.attention_mask.size() != n)
        throw DataError("token sequence length does not match max_len");

    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        int id = seq.ids[i];
        if (id < 0 || id >= cfg.vocab_size) throw DataError("token id out of vocabulary range");
        for (int j = 0; j < d; ++j)
            x(i, j) = p.tok_emb(id, j) + p.pos_emb(i, j) + p.seg_emb(0, j);
    }
    if (cache) {
        cache->x0 = x;
        cache->layers.assign(cfg.num_layers, {});
    }

    double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int l = 0; l < cfg.num_layers; ++l) {
        const LayerParams& L = p.layers[l];
        detail::LayerCache local;
        detail::LayerCache& lc = cache ? cache->layers[l] : local;
        lc.x_in = x;

        lc.q = detail::affine(x, L.wq, L.bq);
        lc.k = detail::affine(x, L.wk, L.bk);
        lc.v = detail::affine(x, L.wv, L.bv);

        lc.concat = Matrix(n, d);
        lc.attn.assign(H, Matrix());
        std::vector<double> row(n);
        for (int h = 0; h < H; ++h) {
            int off = h * dk;
            Matrix& A = lc.attn[h];
            A = Matrix(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) {
                    if (!seq.attention_mask[j]) {
                        row[j] = -std::numeric_limits<double>::infinity();
                        continue;
                    }
                    double s = 0.0;
                    for (int c = 0; c < dk; ++c) s += lc.q(i, off + c) * lc.k(j, off + c);
                    row[j] = s * scale;
                    mx = std::max(mx, row[j]);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] = seq.attention_mask[j] ? std::exp(row[j] - mx) : 0.0;
                    z += row[j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    double a = row[j] / z;
                    A(i, j) = a;
                    for (int c = 0; c < dk; ++c)
                        lc.concat(i, off + c) += a * lc.v(j, off + c);
                }
            }
        }

        Matrix m = detail::affine(lc.concat, L.wo, L.bo);
        if (train_rng && cfg.dropout > 0.0) {
            lc.proj_drop_mask = detail::dropout_mask(n, d, cfg.dropout, *train_rng);
            for (std::size_t i = 0; i < m.size(); ++i)
                m.data()[i] *= lc.proj_drop_mask.data()[i];
        }
        detail::check_finite(m, l, "attention projection");

        Matrix r1 = m;
        r1 += lc.x_in;
        lc.h1 = detail::layer_norm(r1, L.ln1_g, L.ln1_b, lc.ln1);

        lc.f1 = detail::affine(lc.h1, L.w1, L.b1);
        lc.act = Matrix(n, cfg.ff_dim);
        for (std::size_t i = 0; i < lc.f1.size(); ++i)
            lc.act.data()[i] = detail::gelu(lc.f1.data()[i]);
        Matrix f2 = detail::affine(lc.act, L.w2, L.b2);
        if (train_rng && cfg.dropout > 0.0) {
            lc.ff_drop_mask = detail::dropout_mask(n, d, cfg.dropout, *train_rng);
            for (std::size_t i = 0; i < f2.size(); ++i)
                f2.data()[i] *= lc.ff_drop_mask.data()[i];
        }
        detail::check_finite(f2, l, "feed-forward");

        Matrix r2 = f2;
        r2 += lc.h1;
        x = detail::layer_norm(r2, L.ln2_g, L.ln2_b, lc.ln2);
        detail::check_finite(x, l, "layer output");
    }

    std::vector<double> logits(cfg.num_classes, 0.0);
    for (int c = 0; c < cfg.num_classes; ++c) {
        double s = p.bc[c];
        for (int j = 0; j < d; ++j) s += x(0, j) * p.wc(j, c);
        logits[c] = s;
    }
    detail::softmax_row_inplace(logits);
    if (cache) {
        cache->cls_state.assign(d, 0.0);
        for (int j = 0; j < d; ++j) cache->cls_state[j] = x(0, j);
        cache->probs = logits;
    }
    return logits;
}

// Cross-entropy loss for one example plus accumulation of all parameter
// gradients into `grad` (same shapes as `p`).
inline double loss_and_accumulate_grad(const EncoderParams& p, const TokenSequence& seq,
                                       int label, EncoderParams& grad,
                                       Rng* train_rng = nullptr) {
    const EncoderConfig& cfg = p.cfg;
    std::size_t n = static_cast<std::size_t>(cfg.max_len);
    int d = cfg.model_dim;
    int H = cfg.num_heads;
    int dk = cfg.head_dim();
    double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    detail::ForwardCache cache;
    std::vector<double> probs = encode_and_classify(p, seq, &cache, train_rng);
    double loss = -std::log(std::max(probs[label], 1e-300));

    // classifier head
    std::vector<double> dlogits = probs;
    dlogits[label] -= 1.0;
    Matrix dx(n, d);
    for (int c = 0; c < cfg.num_classes; ++c) {
        grad.bc[c] += dlogits[c];
        for (int j = 0; j < d; ++j) {
            grad.wc(j, c) += cache.cls_state[j] * dlogits[c];
            dx(0, j) += p.wc(j, c) * dlogits[c];
        }
    }

    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const LayerParams& L = p.layers[l];
        LayerParams& G = grad.layers[l];
        detail::LayerCache& lc = cache.layers[l];

        // out = LN2(h1 + f2)
        Matrix dr2 = detail::layer_norm_backward(dx, lc.ln2, L.ln2_g, G.ln2_g, G.ln2_b);
        Matrix dh1 = dr2;  // residual branch
        Matrix df2 = dr2;
        if (train_rng && cfg.dropout > 0.0)
            for (std::size_t i = 0; i < df2.size(); ++i)
                df2.data()[i] *= lc.ff_drop_mask.data()[i];

        // f2 = act * w2 + b2
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) G.b2[j] += df2(i, j);
        Matrix dact = matmul(df2, L.w2.transpose());
        {
            Matrix dw2 = matmul(lc.act.transpose(), df2);
            G.w2 += dw2;
        }
        // act = gelu(f1)
        Matrix df1(n, cfg.ff_dim);
        for (std::size_t i = 0; i < df1.size(); ++i)
            df1.data()[i] = dact.data()[i] * detail::gelu_grad(lc.f1.data()[i]);
        // f1 = h1 * w1 + b1
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < cfg.ff_dim; ++j) G.b1[j] += df1(i, j);
        {
            Matrix dw1 = matmul(lc.h1.transpose(), df1);
            G.w1 += dw1;
        }
        dh1 += matmul(df1, L.w1.transpose());

        // h1 = LN1(x_in + m)
        Matrix dr1 = detail::layer_norm_backward(dh1, lc.ln1, L.ln1_g, G.ln1_g, G.ln1_b);
        Matrix dxin = dr1;  // residual branch
        Matrix dm = dr1;
        if (train_rng && cfg.dropout > 0.0)
            for (std::size_t i = 0; i < dm.size(); ++i)
                dm.data()[i] *= lc.proj_drop_mask.data()[i];

        // m = concat * wo + bo
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) G.bo[j] += dm(i, j);
        {
            Matrix dwo = matmul(lc.concat.transpose(), dm);
            G.wo += dwo;
        }
        Matrix dconcat = matmul(dm, L.wo.transpose());

        // attention per head
        Matrix dq(n, d), dkk(n, d), dv(n, d);
        for (int h = 0; h < H; ++h) {
            int off = h * dk;
            const Matrix& A = lc.attn[h];
            // dA = dO V^T ; dV = A^T dO
            Matrix dA(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (!seq.attention_mask[j]) continue;
                    double s = 0.0;
                    for (int c = 0; c < dk; ++c)
                        s += dconcat(i, off + c) * lc.v(j, off + c);
                    dA(i, j) = s;
                }
            for (std::size_t j = 0; j < n; ++j) {
                if (!seq.attention_mask[j]) continue;
                for (int c = 0; c < dk; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        s += A(i, j) * dconcat(i, off + c);
                    dv(j, off + c) = s;
                }
            }
            // softmax backward: dS = A (dA - sum_j dA*A)
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += dA(i, j) * A(i, j);
                for (std::size_t j = 0; j < n; ++j) {
                    double ds = A(i, j) * (dA(i, j) - dot) * scale;
                    if (ds == 0.0) continue;
                    for (int c = 0; c < dk; ++c) {
                        dq(i, off + c) += ds * lc.k(j, off + c);
                        dkk(j, off + c) += ds * lc.q(i, off + c);
                    }
                }
            }
        }

        // q = x wq + bq etc.
        auto back_affine = [&](const Matrix& dout, const Matrix& w, Matrix& dw,
                               std::vector<double>& db) {
            for (std::size_t i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) db[j] += dout(i, j);
            Matrix dwl = matmul(lc.x_in.transpose(), dout);
            dw += dwl;
            dxin += matmul(dout, w.transpose());
        };
        back_affine(dq, L.wq, G.wq, G.bq);
        back_affine(dkk, L.wk, G.wk, G.bk);
        back_affine(dv, L.wv, G.wv, G.bv);

        dx = std::move(dxin);
    }

    // embeddings
    for (std::size_t i = 0; i < n; ++i) {
        int id = seq.ids[i];
        for (int j = 0; j < d; ++j) {
            grad.tok_emb(id, j) += dx(i, j);
            grad.pos_emb(i, j) += dx(i, j);
            grad.seg_emb(0, j) += dx(i, j);
        }
    }
    return loss;
}

struct TrainSettings {
    int epochs = 100;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double eval_fraction = 0.2;

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw ConfigError("epochs/batch_size must be positive");
        if (learning_rate <= 0.0 || !std::isfinite(learning_rate))
            throw ConfigError("learning_rate must be positive and finite");
        if (eval_fraction < 0.0 || eval_fraction >= 1.0)
            throw ConfigError("eval_fraction must be in [0,1)");
    }
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    EncoderParams params;
    std::vector<EpochLog> log;
    names::EvalReport eval;  // held-out split, empty split -> zeroed report
};

// Adam state mirrors the parameter traversal.
class AdamOptimizer {
public:
    AdamOptimizer(const EncoderConfig& cfg, const TrainSettings& s)
        : settings_(s), m_(zeros_like_params(cfg)), v_(zeros_like_params(cfg)) {}

    void step(EncoderParams& p, EncoderParams& grad) {
        ++t_;
        double bc1 = 1.0 - std::pow(settings_.beta1, t_);
        double bc2 = 1.0 - std::pow(settings_.beta2, t_);
        std::vector<std::vector<double>*> pv, gv, mv, vv;
        collect(p, pv);
        collect(grad, gv);
        collect(m_, mv);
        collect(v_, vv);
        for (std::size_t k = 0; k < pv.size(); ++k) {
            auto& pw = *pv[k];
            auto& gw = *gv[k];
            auto& mw = *mv[k];
            auto& vw = *vv[k];
            for (std::size_t i = 0; i < pw.size(); ++i) {
                double g = gw[i];
                mw[i] = settings_.beta1 * mw[i] + (1.0 - settings_.beta1) * g;
                vw[i] = settings_.beta2 * vw[i] + (1.0 - settings_.beta2) * g * g;
                double mhat = mw[i] / bc1;
                double vhat = vw[i] / bc2;
                pw[i] -= settings_.learning_rate * mhat / (std::sqrt(vhat) + settings_.adam_eps);
            }
        }
    }

private:
    static void collect(EncoderParams& p, std::vector<std::vector<double>*>& out) {
        out.clear();
        for_each_tensor(p, [&](const std::string&, std::vector<double>& v) { out.push_back(&v); });
    }

    TrainSettings settings_;
    EncoderParams m_, v_;
    long long t_ = 0;
};

inline void zero_grad(EncoderParams& g) {
    for_each_tensor(g, [](const std::string&, std::vector<double>& v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
}

inline TrainResult train_classifier(
    const std::vector<std::pair<TokenSequence, ActivityLabel>>& labeled,
    const EncoderConfig& cfg, const TrainSettings& settings, std::uint64_t seed) {
    cfg.validate();
    settings.validate();
    if (labeled.empty()) throw DataError("no labeled examples");

    Rng rng(seed);

    // deterministic stratified held-out split
    std::vector<std::vector<std::size_t>> by_class(cfg.num_classes);
    for (std::size_t i = 0; i < labeled.size(); ++i)
        by_class[static_cast<int>(labeled[i].second)].push_back(i);
    std::vector<std::size_t> train_idx, eval_idx;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto idx = by_class[c];
        Rng crng = rng.split(500 + c);
        crng.shuffle(idx);
        std::size_t n_eval = static_cast<std::size_t>(
            settings.eval_fraction * static_cast<double>(idx.size()));
        if (n_eval >= idx.size() && !idx.empty()) n_eval = idx.size() - 1;
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_eval ? eval_idx : train_idx).push_back(idx[i]);
    }
    for (int c = 0; c < cfg.num_classes; ++c) {
        bool present = false;
        for (std::size_t i : train_idx)
            if (static_cast<int>(labeled[i].second) == c) { present = true; break; }
        if (!present)
            throw DataError("class '" + activity_label_names()[c] +
                            "' has no training examples");
    }

    TrainResult result{init_params(cfg, rng.split(1)), {}, {}};
    AdamOptimizer adam(cfg, settings);
    EncoderParams grad = zeros_like_params(cfg);
    Rng drop_rng = rng.split(2);

    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        Rng erng = rng.split(10000 + static_cast<std::uint64_t>(epoch));
        erng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(settings.batch_size)) {
            std::size_t end = std::min(order.size(),
                                       start + static_cast<std::size_t>(settings.batch_size));
            zero_grad(grad);
            for (std::size_t i = start; i < end; ++i) {
                const auto& [seq, label] = labeled[order[i]];
                Rng* dr = cfg.dropout > 0.0 ? &drop_rng : nullptr;
                double loss = loss_and_accumulate_grad(result.params, seq,
                                                       static_cast<int>(label), grad, dr);
                if (!std::isfinite(loss))
                    throw NumericError("training loss diverged to non-finite");
                loss_sum += loss;
            }
            double inv = 1.0 / static_cast<double>(end - start);
            for_each_tensor(grad, [&](const std::string&, std::vector<double>& v) {
                for (double& x : v) x *= inv;
            });
            adam.step(result.params, grad);
        }

        for (std::size_t i : train_idx) {
            const auto& [seq, label] = labeled[i];
            std::vector<double> probs = encode_and_classify(result.params, seq);
            int best = 0;
            for (int c = 1; c < cfg.num_classes; ++c)
                if (probs[c] > probs[best]) best = c;
            if (best == static_cast<int>(label)) ++correct;
        }
        EpochLog el;
        el.epoch = epoch;
        el.mean_loss = loss_sum / static_cast<double>(train_idx.size());
        el.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_idx.size());
        result.log.push_back(el);
    }

    if (!eval_idx.empty()) {
        std::vector<int> actual, predicted;
        for (std::size_t i : eval_idx) {
            const auto& [seq, label] = labeled[i];
            std::vector<double> probs = encode_and_classify(result.params, seq);
            int best = 0;
            for (int c = 1; c < cfg.num_classes; ++c)
                if (probs[c] > probs[best]) best = c;
            actual.push_back(static_cast<int>(label));
            predicted.push_back(best);
        }
        result.eval = names::eval_from_predictions(actual, predicted, cfg.num_classes);
    }
    return result;
}

// argmax with the smaller-class-index tie-break
inline ActivityLabel classify_one(const EncoderParams& p, const TokenSequence& seq) {
    std::vector<double> probs = encode_and_classify(p, seq);
    int best = 0;
    for (int c = 1; c < p.cfg.num_classes; ++c)
        if (probs[c] > probs[best]) best = c;
    return static_cast<ActivityLabel>(best);
}

}  // namespace cm::encoder
