#include "lact/prior_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lact/config.hpp"
#include "lact/io.hpp"
#include "lact/optim.hpp"
#include "lact/random.hpp"
#include "lact/resample.hpp"

namespace lact {

namespace {

// ---- small dense helpers on Grid ----

Grid matmul(const Grid& a, const Grid& b) {
    if (a.cols() != b.rows()) throw shape_error("matmul: inner dimensions differ");
    Grid c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += av * b(k, j);
        }
    return c;
}

// a^T * b
Grid matmul_At(const Grid& a, const Grid& b) {
    if (a.rows() != b.rows()) throw shape_error("matmul_At: row counts differ");
    Grid c(a.cols(), b.cols());
    for (int k = 0; k < a.rows(); ++k)
        for (int i = 0; i < a.cols(); ++i) {
            double av = a(k, i);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += av * b(k, j);
        }
    return c;
}

// a * b^T
Grid matmul_Bt(const Grid& a, const Grid& b) {
    if (a.cols() != b.cols()) throw shape_error("matmul_Bt: column counts differ");
    Grid c(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    return c;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double dsilu(double x) {
    double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

void softmax_rows_inplace(Grid& s) {
    for (int i = 0; i < s.rows(); ++i) {
        double mx = s(i, 0);
        for (int j = 1; j < s.cols(); ++j) mx = std::max(mx, s(i, j));
        double sum = 0.0;
        for (int j = 0; j < s.cols(); ++j) {
            s(i, j) = std::exp(s(i, j) - mx);
            sum += s(i, j);
        }
        for (int j = 0; j < s.cols(); ++j) s(i, j) /= sum;
    }
}

// dS given A = softmax_rows(S) and dA
Grid softmax_rows_vjp(const Grid& a, const Grid& da) {
    Grid ds(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < a.cols(); ++j) dot += da(i, j) * a(i, j);
        for (int j = 0; j < a.cols(); ++j) ds(i, j) = a(i, j) * (da(i, j) - dot);
    }
    return ds;
}

// ---- 3x3 same convolution (zero padding) ----

void conv3x3(const Tensor3& in, const std::vector<double>& k, const std::vector<double>& b,
             int out_ch, Tensor3& out) {
    int ci = in.ch, h = in.h, w = in.w;
    out = Tensor3(out_ch, h, w);
    for (int co = 0; co < out_ch; ++co)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = b[co];
                for (int c = 0; c < ci; ++c)
                    for (int u = -1; u <= 1; ++u) {
                        int y = i + u;
                        if (y < 0 || y >= h) continue;
                        for (int v = -1; v <= 1; ++v) {
                            int x = j + v;
                            if (x < 0 || x >= w) continue;
                            acc += k[((static_cast<size_t>(co) * ci + c) * 3 + (u + 1)) * 3 +
                                     (v + 1)] *
                                   in.at(c, y, x);
                        }
                    }
                out.at(co, i, j) = acc;
            }
}

void conv3x3_vjp_input(const Tensor3& dout, const std::vector<double>& k, int in_ch,
                       Tensor3& din) {
    int co_n = dout.ch, h = dout.h, w = dout.w;
    din = Tensor3(in_ch, h, w);
    for (int co = 0; co < co_n; ++co)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double g = dout.at(co, i, j);
                if (g == 0.0) continue;
                for (int c = 0; c < in_ch; ++c)
                    for (int u = -1; u <= 1; ++u) {
                        int y = i + u;
                        if (y < 0 || y >= h) continue;
                        for (int v = -1; v <= 1; ++v) {
                            int x = j + v;
                            if (x < 0 || x >= w) continue;
                            din.at(c, y, x) +=
                                g * k[((static_cast<size_t>(co) * in_ch + c) * 3 + (u + 1)) * 3 +
                                      (v + 1)];
                        }
                    }
            }
}

void conv3x3_vjp_params(const Tensor3& in, const Tensor3& dout, std::vector<double>& dk,
                        std::vector<double>& db) {
    int ci = in.ch, co_n = dout.ch, h = in.h, w = in.w;
    dk.assign(static_cast<size_t>(co_n) * ci * 9, 0.0);
    db.assign(co_n, 0.0);
    for (int co = 0; co < co_n; ++co)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double g = dout.at(co, i, j);
                if (g == 0.0) continue;
                db[co] += g;
                for (int c = 0; c < ci; ++c)
                    for (int u = -1; u <= 1; ++u) {
                        int y = i + u;
                        if (y < 0 || y >= h) continue;
                        for (int v = -1; v <= 1; ++v) {
                            int x = j + v;
                            if (x < 0 || x >= w) continue;
                            dk[((static_cast<size_t>(co) * ci + c) * 3 + (u + 1)) * 3 + (v + 1)] +=
                                g * in.at(c, y, x);
                        }
                    }
            }
}

// ---- group normalization ----

int group_count(int channels) {
    int g = std::min(8, channels);
    while (channels % g) --g;
    return g;
}

constexpr double kGnEps = 1e-5;

struct GnCache {
    Tensor3 xhat;
    std::vector<double> inv_std; // per group
};

Tensor3 group_norm(const Tensor3& x, GnCache* cache) {
    int groups = group_count(x.ch);
    int per = x.ch / groups;
    Tensor3 out(x.ch, x.h, x.w);
    std::vector<double> inv(groups);
    for (int g = 0; g < groups; ++g) {
        double mean = 0.0, sq = 0.0;
        long m = static_cast<long>(per) * x.h * x.w;
        for (int c = g * per; c < (g + 1) * per; ++c)
            for (int i = 0; i < x.h; ++i)
                for (int j = 0; j < x.w; ++j) {
                    double v = x.at(c, i, j);
                    mean += v;
                    sq += v * v;
                }
        mean /= static_cast<double>(m);
        double var = sq / static_cast<double>(m) - mean * mean;
        if (var < 0.0) var = 0.0;
        inv[g] = 1.0 / std::sqrt(var + kGnEps);
        for (int c = g * per; c < (g + 1) * per; ++c)
            for (int i = 0; i < x.h; ++i)
                for (int j = 0; j < x.w; ++j)
                    out.at(c, i, j) = (x.at(c, i, j) - mean) * inv[g];
    }
    if (cache) {
        cache->xhat = out;
        cache->inv_std = inv;
    }
    return out;
}

Tensor3 group_norm_vjp(const Tensor3& dxhat, const GnCache& cache) {
    const Tensor3& xhat = cache.xhat;
    int groups = static_cast<int>(cache.inv_std.size());
    int per = xhat.ch / groups;
    Tensor3 dx(xhat.ch, xhat.h, xhat.w);
    double m = static_cast<double>(per) * xhat.h * xhat.w;
    for (int g = 0; g < groups; ++g) {
        double sum_d = 0.0, sum_dx = 0.0;
        for (int c = g * per; c < (g + 1) * per; ++c)
            for (int i = 0; i < xhat.h; ++i)
                for (int j = 0; j < xhat.w; ++j) {
                    sum_d += dxhat.at(c, i, j);
                    sum_dx += dxhat.at(c, i, j) * xhat.at(c, i, j);
                }
        for (int c = g * per; c < (g + 1) * per; ++c)
            for (int i = 0; i < xhat.h; ++i)
                for (int j = 0; j < xhat.w; ++j)
                    dx.at(c, i, j) = cache.inv_std[g] *
                                     (dxhat.at(c, i, j) - sum_d / m -
                                      xhat.at(c, i, j) * sum_dx / m);
    }
    return dx;
}

// ---- sinusoidal encodings ----

std::vector<double> sinusoid(double t, int dim) {
    std::vector<double> e(dim);
    for (int j = 0; j < dim; ++j) {
        double freq = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / dim);
        e[j] = (j % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
    }
    return e;
}

// ---- token bridges ----

Grid tokens_of(const Tensor3& t) {
    Grid g(t.h * t.w, t.ch);
    for (int i = 0; i < t.h; ++i)
        for (int j = 0; j < t.w; ++j)
            for (int c = 0; c < t.ch; ++c) g(i * t.w + j, c) = t.at(c, i, j);
    return g;
}

Tensor3 tokens_to_tensor(const Grid& g, int h, int w) {
    Tensor3 t(g.cols(), h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < g.cols(); ++c) t.at(c, i, j) = g(i * w + j, c);
    return t;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

double log_snr(double sigma) { return -2.0 * std::log(std::max(sigma, 1e-300)); }

// ---- BlockParams ----

BlockParams BlockParams::zeros(int channels, int d_h) {
    if (channels <= 0 || d_h <= 0 || d_h > channels)
        throw config_error("BlockParams: need 0 < d_h <= channels");
    BlockParams p;
    p.channels = channels;
    p.d_h = d_h;
    p.gca_hidden = std::max(1, channels / 2);
    p.Wq = Grid(channels, d_h);
    p.Wk = Grid(channels, d_h);
    p.Wv = Grid(channels, d_h);
    p.Wo = Grid(d_h, channels);
    size_t conv_n = static_cast<size_t>(channels) * channels * 9;
    p.conv_block_k.assign(conv_n, 0.0);
    p.conv_block_b.assign(channels, 0.0);
    p.te_w1.assign(static_cast<size_t>(p.time_feat) * p.time_hidden, 0.0);
    p.te_b1.assign(p.time_hidden, 0.0);
    p.te_w2.assign(static_cast<size_t>(p.time_hidden) * 2 * channels, 0.0);
    p.te_b2.assign(2 * channels, 0.0);
    p.te_conv_k.assign(conv_n, 0.0);
    p.te_conv_b.assign(channels, 0.0);
    p.gca_w1.assign(static_cast<size_t>(channels) * p.gca_hidden, 0.0);
    p.gca_b1.assign(p.gca_hidden, 0.0);
    p.gca_w2.assign(static_cast<size_t>(p.gca_hidden) * channels, 0.0);
    p.gca_b2.assign(channels, 0.0);
    p.out_conv_k.assign(conv_n, 0.0);
    p.out_conv_b.assign(channels, 0.0);
    return p;
}

BlockParams BlockParams::random_init(int channels, int d_h, uint64_t seed,
                                     bool nonzero_time_mlp) {
    BlockParams p = zeros(channels, d_h);
    CounterRng rng(seed);
    uint64_t idx = 0;
    auto fill = [&](std::vector<double>& v, double fan_in) {
        double scale = 0.4 / std::sqrt(fan_in);
        for (double& x : v) x = scale * rng.gaussian(1, idx++);
    };
    auto fill_grid = [&](Grid& g, double fan_in) {
        double scale = 0.4 / std::sqrt(fan_in);
        for (double& x : g.values()) x = scale * rng.gaussian(1, idx++);
    };
    fill_grid(p.Wq, channels);
    fill_grid(p.Wk, channels);
    fill_grid(p.Wv, channels);
    fill_grid(p.Wo, d_h);
    fill(p.conv_block_k, channels * 9.0);
    fill(p.conv_block_b, 1.0);
    fill(p.te_w1, p.time_feat);
    fill(p.te_b1, 1.0);
    if (nonzero_time_mlp) {
        fill(p.te_w2, p.time_hidden);
        fill(p.te_b2, 1.0);
    }
    fill(p.te_conv_k, channels * 9.0);
    fill(p.te_conv_b, 1.0);
    fill(p.gca_w1, channels);
    fill(p.gca_b1, 1.0);
    fill(p.gca_w2, p.gca_hidden);
    fill(p.gca_b2, 1.0);
    fill(p.out_conv_k, channels * 9.0);
    fill(p.out_conv_b, 1.0);
    return p;
}

// ---- cross-attention ----

namespace {

struct AttnCache {
    Grid Q, K, V, M, A;
};

// Default formulation: the text token pairs (q_n, k_n) define a bilinear
// matching form M = sum_n q_n k_n^T / (N_t sqrt(d)); image values attend to
// each other under M. Values come from the image, queries and keys from the
// text, and each softmax row sums to 1.
Grid attention_forward(const Grid& ztx, const Grid& zim, const BlockParams& p, AttnCache* cache) {
    int nv = zim.rows();
    if (nv <= 0) throw shape_error("cross_attention: no image tokens");
    if (zim.cols() != p.channels) throw shape_error("cross_attention: image token dim mismatch");
    if (ztx.rows() == 0) return Grid(nv, p.d_h); // attention skipped
    if (ztx.cols() != p.channels) throw shape_error("cross_attention: text token dim mismatch");

    Grid V = matmul(zim, p.Wv);
    if (p.conventional_attention) {
        Grid Q = matmul(zim, p.Wq);
        Grid K = matmul(ztx, p.Wk);
        Grid Vt = matmul(ztx, p.Wv);
        Grid S = matmul_Bt(Q, K);
        S *= 1.0 / std::sqrt(static_cast<double>(p.channels));
        softmax_rows_inplace(S);
        Grid out = matmul(S, Vt);
        if (cache) *cache = AttnCache{std::move(Q), std::move(K), std::move(Vt), Grid(), S};
        return out;
    }
    Grid Q = matmul(ztx, p.Wq);
    Grid K = matmul(ztx, p.Wk);
    Grid M = matmul_At(Q, K);
    M *= 1.0 / (static_cast<double>(ztx.rows()) * std::sqrt(static_cast<double>(p.channels)));
    Grid S = matmul_Bt(matmul(V, M), V); // S = V M V^T
    softmax_rows_inplace(S);
    Grid out = matmul(S, V);
    if (cache) *cache = AttnCache{std::move(Q), std::move(K), std::move(V), std::move(M), S};
    return out;
}

void attention_backward(const Grid& ztx, const Grid& zim, const BlockParams& p,
                        const AttnCache& c, const Grid& dout, AttentionGrads& g) {
    int d = p.channels;
    g.dWq = Grid(d, p.d_h);
    g.dWk = Grid(d, p.d_h);
    g.dWv = Grid(d, p.d_h);
    g.dZim = Grid(zim.rows(), d);
    if (ztx.rows() == 0) {
        g.dZtx = Grid();
        return;
    }
    g.dZtx = Grid(ztx.rows(), d);

    if (p.conventional_attention) {
        double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
        Grid dA = matmul_Bt(dout, c.V);
        Grid dV = matmul_At(c.A, dout);
        Grid dS = softmax_rows_vjp(c.A, dA);
        dS *= inv_sqrt;
        Grid dQ = matmul(dS, c.K);
        Grid dK = matmul_At(dS, c.Q);
        g.dWq = matmul_At(zim, dQ);
        g.dWk = matmul_At(ztx, dK);
        g.dWv = matmul_At(ztx, dV);
        g.dZim = matmul_Bt(dQ, p.Wq);
        g.dZtx = matmul_Bt(dK, p.Wk);
        g.dZtx += matmul_Bt(dV, p.Wv);
        return;
    }

    double cnorm = 1.0 / (static_cast<double>(ztx.rows()) * std::sqrt(static_cast<double>(d)));
    Grid dA = matmul_Bt(dout, c.V);
    Grid dV = matmul_At(c.A, dout);
    Grid dS = softmax_rows_vjp(c.A, dA);
    // S = V M V^T
    Grid VM = matmul(c.V, c.M);
    Grid VMt = matmul_Bt(c.V, c.M); // V M^T
    dV += matmul(dS, VMt);
    dV += matmul_At(dS, VM);
    Grid dM = matmul(matmul_At(c.V, dS), c.V);
    dM *= cnorm;
    Grid dQ = matmul_Bt(c.K, dM); // K dM^T
    Grid dK = matmul(c.Q, dM);
    g.dWq = matmul_At(ztx, dQ);
    g.dWk = matmul_At(ztx, dK);
    g.dWv = matmul_At(zim, dV);
    g.dZtx = matmul_Bt(dQ, p.Wq);
    g.dZtx += matmul_Bt(dK, p.Wk);
    g.dZim = matmul_Bt(dV, p.Wv);
}

} // namespace

Grid cross_attention(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p) {
    return attention_forward(z_tx, z_im_tokens, p, nullptr);
}

Grid cross_attention_vjp(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p,
                         const Grid& dOut, AttentionGrads& grads) {
    AttnCache cache;
    Grid out = attention_forward(z_tx, z_im_tokens, p, &cache);
    if (z_tx.rows() == 0) {
        grads.dWq = Grid(p.channels, p.d_h);
        grads.dWk = Grid(p.channels, p.d_h);
        grads.dWv = Grid(p.channels, p.d_h);
        grads.dZim = Grid(z_im_tokens.rows(), p.channels);
        grads.dZtx = Grid();
        return out;
    }
    attention_backward(z_tx, z_im_tokens, p, cache, dOut, grads);
    return out;
}

Grid cross_attention_matrix(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p) {
    AttnCache cache;
    attention_forward(z_tx, z_im_tokens, p, &cache);
    return cache.A;
}

// ---- time embedding / FiLM ----

namespace {

struct TeCache {
    std::vector<double> enc, hid_pre, hid, mlp_out;
    GnCache gn;
    Tensor3 mod_pre_act; // gamma*xhat+beta, before SiLU
    Tensor3 act;
};

void te_mlp(double h_time, const BlockParams& p, TeCache& c) {
    c.enc = sinusoid(h_time, p.time_feat);
    c.hid_pre.assign(p.time_hidden, 0.0);
    for (int f = 0; f < p.time_feat; ++f)
        for (int h = 0; h < p.time_hidden; ++h)
            c.hid_pre[h] += c.enc[f] * p.te_w1[static_cast<size_t>(f) * p.time_hidden + h];
    for (int h = 0; h < p.time_hidden; ++h) c.hid_pre[h] += p.te_b1[h];
    c.hid.resize(p.time_hidden);
    for (int h = 0; h < p.time_hidden; ++h) c.hid[h] = silu(c.hid_pre[h]);
    int out_n = 2 * p.channels;
    c.mlp_out.assign(out_n, 0.0);
    for (int h = 0; h < p.time_hidden; ++h)
        for (int o = 0; o < out_n; ++o)
            c.mlp_out[o] += c.hid[h] * p.te_w2[static_cast<size_t>(h) * out_n + o];
    for (int o = 0; o < out_n; ++o) c.mlp_out[o] += p.te_b2[o];
}

Tensor3 te_apply(const Tensor3& features, const BlockParams& p, const std::vector<double>& gamma,
                 const std::vector<double>& beta, TeCache* cache) {
    GnCache gn_local;
    GnCache* gn = cache ? &cache->gn : &gn_local;
    Tensor3 xhat = group_norm(features, gn);
    Tensor3 mod(features.ch, features.h, features.w);
    for (int c = 0; c < features.ch; ++c)
        for (int i = 0; i < features.h; ++i)
            for (int j = 0; j < features.w; ++j)
                mod.at(c, i, j) = gamma[c] * xhat.at(c, i, j) + beta[c];
    Tensor3 act(features.ch, features.h, features.w);
    for (size_t i = 0; i < act.size(); ++i) act.v[i] = silu(mod.v[i]);
    Tensor3 out;
    conv3x3(act, p.te_conv_k, p.te_conv_b, p.channels, out);
    if (cache) {
        cache->mod_pre_act = std::move(mod);
        cache->act = std::move(act);
    }
    return out;
}

} // namespace

Tensor3 time_embed_modulate(double h_time, const Tensor3& features, const BlockParams& p) {
    if (features.ch != p.channels) throw shape_error("time_embed_modulate: channel mismatch");
    TeCache c;
    te_mlp(h_time, p, c);
    std::vector<double> gamma(p.channels), beta(p.channels);
    for (int ch = 0; ch < p.channels; ++ch) {
        gamma[ch] = 1.0 + c.mlp_out[ch];
        beta[ch] = c.mlp_out[p.channels + ch];
    }
    return te_apply(features, p, gamma, beta, nullptr);
}

Tensor3 time_embed_modulate_injected(const Tensor3& features, const BlockParams& p,
                                     const std::vector<double>& gamma,
                                     const std::vector<double>& beta) {
    if (features.ch != p.channels) throw shape_error("time_embed_modulate: channel mismatch");
    if (static_cast<int>(gamma.size()) != p.channels ||
        static_cast<int>(beta.size()) != p.channels)
        throw shape_error("time_embed_modulate: gamma/beta length mismatch");
    return te_apply(features, p, gamma, beta, nullptr);
}

Tensor3 time_embed_modulate_vjp(double h_time, const Tensor3& features, const BlockParams& p,
                                const Tensor3& dOut, TimeEmbedGrads& grads) {
    if (features.ch != p.channels) throw shape_error("time_embed_modulate: channel mismatch");
    TeCache c;
    te_mlp(h_time, p, c);
    std::vector<double> gamma(p.channels), beta(p.channels);
    for (int ch = 0; ch < p.channels; ++ch) {
        gamma[ch] = 1.0 + c.mlp_out[ch];
        beta[ch] = c.mlp_out[p.channels + ch];
    }
    Tensor3 out = te_apply(features, p, gamma, beta, &c);

    // conv backward
    conv3x3_vjp_params(c.act, dOut, grads.dConvK, grads.dConvB);
    Tensor3 dAct;
    conv3x3_vjp_input(dOut, p.te_conv_k, p.channels, dAct);
    // SiLU backward
    Tensor3 dMod(features.ch, features.h, features.w);
    for (size_t i = 0; i < dMod.size(); ++i) dMod.v[i] = dAct.v[i] * dsilu(c.mod_pre_act.v[i]);
    // FiLM backward
    std::vector<double> dGamma(p.channels, 0.0), dBeta(p.channels, 0.0);
    Tensor3 dXhat(features.ch, features.h, features.w);
    for (int ch = 0; ch < features.ch; ++ch)
        for (int i = 0; i < features.h; ++i)
            for (int j = 0; j < features.w; ++j) {
                double g = dMod.at(ch, i, j);
                dGamma[ch] += g * c.gn.xhat.at(ch, i, j);
                dBeta[ch] += g;
                dXhat.at(ch, i, j) = g * gamma[ch];
            }
    grads.dFeatures = group_norm_vjp(dXhat, c.gn);

    // MLP backward: mlp_out = [dGamma; dBeta] cotangent
    int out_n = 2 * p.channels;
    std::vector<double> dMlp(out_n);
    for (int ch = 0; ch < p.channels; ++ch) {
        dMlp[ch] = dGamma[ch];
        dMlp[p.channels + ch] = dBeta[ch];
    }
    grads.dW2.assign(static_cast<size_t>(p.time_hidden) * out_n, 0.0);
    grads.dB2 = dMlp;
    std::vector<double> dHid(p.time_hidden, 0.0);
    for (int h = 0; h < p.time_hidden; ++h)
        for (int o = 0; o < out_n; ++o) {
            grads.dW2[static_cast<size_t>(h) * out_n + o] = c.hid[h] * dMlp[o];
            dHid[h] += p.te_w2[static_cast<size_t>(h) * out_n + o] * dMlp[o];
        }
    grads.dB1.assign(p.time_hidden, 0.0);
    grads.dW1.assign(static_cast<size_t>(p.time_feat) * p.time_hidden, 0.0);
    for (int h = 0; h < p.time_hidden; ++h) {
        double dpre = dHid[h] * dsilu(c.hid_pre[h]);
        grads.dB1[h] = dpre;
        for (int f = 0; f < p.time_feat; ++f)
            grads.dW1[static_cast<size_t>(f) * p.time_hidden + h] = c.enc[f] * dpre;
    }
    return out;
}

// ---- guided contextual attention ----

namespace {

struct GcaCache {
    std::vector<double> pool, hid_pre, hid, gate_pre, gate;
};

Tensor3 gca_forward(const Tensor3& x, const BlockParams& p, bool unit_gates, GcaCache* cache) {
    if (x.ch != p.channels) throw shape_error("guided_contextual_attention: channel mismatch");
    GcaCache local;
    GcaCache& c = cache ? *cache : local;
    int C = p.channels, Cr = p.gca_hidden;
    double inv_hw = 1.0 / (static_cast<double>(x.h) * x.w);
    c.pool.assign(C, 0.0);
    for (int ch = 0; ch < C; ++ch) {
        for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j) c.pool[ch] += x.at(ch, i, j);
        c.pool[ch] *= inv_hw;
    }
    c.hid_pre.assign(Cr, 0.0);
    for (int ch = 0; ch < C; ++ch)
        for (int r = 0; r < Cr; ++r)
            c.hid_pre[r] += c.pool[ch] * p.gca_w1[static_cast<size_t>(ch) * Cr + r];
    for (int r = 0; r < Cr; ++r) c.hid_pre[r] += p.gca_b1[r];
    c.hid.resize(Cr);
    for (int r = 0; r < Cr; ++r) c.hid[r] = silu(c.hid_pre[r]);
    c.gate_pre.assign(C, 0.0);
    for (int r = 0; r < Cr; ++r)
        for (int ch = 0; ch < C; ++ch)
            c.gate_pre[ch] += c.hid[r] * p.gca_w2[static_cast<size_t>(r) * C + ch];
    for (int ch = 0; ch < C; ++ch) c.gate_pre[ch] += p.gca_b2[ch];
    c.gate.resize(C);
    for (int ch = 0; ch < C; ++ch) c.gate[ch] = unit_gates ? 1.0 : sigmoid(c.gate_pre[ch]);

    Tensor3 out(x.ch, x.h, x.w);
    for (int ch = 0; ch < C; ++ch)
        for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j) out.at(ch, i, j) = x.at(ch, i, j) * c.gate[ch];
    return out;
}

} // namespace

Tensor3 guided_contextual_attention(const Tensor3& features, const BlockParams& p,
                                    bool unit_gates) {
    return gca_forward(features, p, unit_gates, nullptr);
}

Tensor3 guided_contextual_attention_vjp(const Tensor3& features, const BlockParams& p,
                                        const Tensor3& dOut, GcaGrads& grads) {
    GcaCache c;
    Tensor3 out = gca_forward(features, p, false, &c);
    int C = p.channels, Cr = p.gca_hidden;
    double inv_hw = 1.0 / (static_cast<double>(features.h) * features.w);

    grads.dFeatures = Tensor3(features.ch, features.h, features.w);
    std::vector<double> dGate(C, 0.0);
    for (int ch = 0; ch < C; ++ch)
        for (int i = 0; i < features.h; ++i)
            for (int j = 0; j < features.w; ++j) {
                double g = dOut.at(ch, i, j);
                grads.dFeatures.at(ch, i, j) = g * c.gate[ch];
                dGate[ch] += g * features.at(ch, i, j);
            }
    std::vector<double> dGatePre(C);
    for (int ch = 0; ch < C; ++ch) dGatePre[ch] = dGate[ch] * c.gate[ch] * (1.0 - c.gate[ch]);

    grads.dW2.assign(static_cast<size_t>(Cr) * C, 0.0);
    grads.dB2 = dGatePre;
    std::vector<double> dHid(Cr, 0.0);
    for (int r = 0; r < Cr; ++r)
        for (int ch = 0; ch < C; ++ch) {
            grads.dW2[static_cast<size_t>(r) * C + ch] = c.hid[r] * dGatePre[ch];
            dHid[r] += p.gca_w2[static_cast<size_t>(r) * C + ch] * dGatePre[ch];
        }
    grads.dW1.assign(static_cast<size_t>(C) * Cr, 0.0);
    grads.dB1.assign(Cr, 0.0);
    std::vector<double> dPool(C, 0.0);
    for (int r = 0; r < Cr; ++r) {
        double dpre = dHid[r] * dsilu(c.hid_pre[r]);
        grads.dB1[r] = dpre;
        for (int ch = 0; ch < C; ++ch) {
            grads.dW1[static_cast<size_t>(ch) * Cr + r] = c.pool[ch] * dpre;
            dPool[ch] += p.gca_w1[static_cast<size_t>(ch) * Cr + r] * dpre;
        }
    }
    for (int ch = 0; ch < C; ++ch) {
        double spread = dPool[ch] * inv_hw;
        for (int i = 0; i < features.h; ++i)
            for (int j = 0; j < features.w; ++j) grads.dFeatures.at(ch, i, j) += spread;
    }
    return out;
}

// ---- encoder block ----

namespace {

Grid with_time_token(const Grid& ztx, double h_time, int d) {
    Grid t(ztx.rows() + 1, d);
    for (int i = 0; i < ztx.rows(); ++i)
        for (int j = 0; j < d; ++j) t(i, j) = ztx(i, j);
    std::vector<double> tok = sinusoid(h_time, d);
    for (int j = 0; j < d; ++j) t(ztx.rows(), j) = tok[j];
    return t;
}

} // namespace

Tensor3 encoder_block_forward(const Tensor3& z_im, const Grid& z_tx, double h_time,
                              const BlockParams& p) {
    if (z_im.ch != p.channels) throw shape_error("encoder_block_forward: channel mismatch");
    if (z_tx.rows() > 0 && z_tx.cols() != p.channels)
        throw shape_error("encoder_block_forward: token dim mismatch");

    Tensor3 a;
    conv3x3(z_im, p.conv_block_k, p.conv_block_b, p.channels, a);
    Tensor3 zp(a.ch, a.h, a.w);
    for (size_t i = 0; i < a.size(); ++i) zp.v[i] = silu(a.v[i]);

    Tensor3 z_comb = zp;
    if (z_tx.rows() > 0) {
        Grid text = with_time_token(z_tx, h_time, p.channels);
        Grid zt = tokens_of(zp);
        Grid ca = cross_attention(text, zt, p);
        Grid upd = matmul(ca, p.Wo);
        Tensor3 upd_t = tokens_to_tensor(upd, z_im.h, z_im.w);
        for (size_t i = 0; i < z_comb.size(); ++i) z_comb.v[i] += upd_t.v[i];
    }

    Tensor3 te = time_embed_modulate(h_time, z_comb, p);
    Tensor3 g = gca_forward(te, p, false, nullptr);
    Tensor3 o;
    conv3x3(g, p.out_conv_k, p.out_conv_b, p.channels, o);
    Tensor3 out = z_im;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += o.v[i];
    return out;
}

Tensor3 encoder_block_vjp(const Tensor3& z_im, const Grid& z_tx, double h_time,
                          const BlockParams& p, const Tensor3& dOut, Tensor3& dZim) {
    if (z_im.ch != p.channels) throw shape_error("encoder_block_vjp: channel mismatch");

    // forward with caches
    Tensor3 a;
    conv3x3(z_im, p.conv_block_k, p.conv_block_b, p.channels, a);
    Tensor3 zp(a.ch, a.h, a.w);
    for (size_t i = 0; i < a.size(); ++i) zp.v[i] = silu(a.v[i]);

    bool attend = z_tx.rows() > 0;
    Grid text, zt;
    AttnCache attn_cache;
    Tensor3 z_comb = zp;
    if (attend) {
        text = with_time_token(z_tx, h_time, p.channels);
        zt = tokens_of(zp);
        Grid ca = attention_forward(text, zt, p, &attn_cache);
        Grid upd = matmul(ca, p.Wo);
        Tensor3 upd_t = tokens_to_tensor(upd, z_im.h, z_im.w);
        for (size_t i = 0; i < z_comb.size(); ++i) z_comb.v[i] += upd_t.v[i];
    }

    TeCache te_cache;
    te_mlp(h_time, p, te_cache);
    std::vector<double> gamma(p.channels), beta(p.channels);
    for (int ch = 0; ch < p.channels; ++ch) {
        gamma[ch] = 1.0 + te_cache.mlp_out[ch];
        beta[ch] = te_cache.mlp_out[p.channels + ch];
    }
    Tensor3 te = te_apply(z_comb, p, gamma, beta, &te_cache);
    GcaCache gca_cache;
    Tensor3 g = gca_forward(te, p, false, &gca_cache);
    Tensor3 o;
    conv3x3(g, p.out_conv_k, p.out_conv_b, p.channels, o);
    Tensor3 out = z_im;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += o.v[i];

    // backward
    dZim = dOut; // outer residual

    Tensor3 dG;
    conv3x3_vjp_input(dOut, p.out_conv_k, p.channels, dG);

    // GCA backward (input grad only)
    Tensor3 dTe(te.ch, te.h, te.w);
    {
        int C = p.channels, Cr = p.gca_hidden;
        double inv_hw = 1.0 / (static_cast<double>(te.h) * te.w);
        std::vector<double> dGate(C, 0.0);
        for (int ch = 0; ch < C; ++ch)
            for (int i = 0; i < te.h; ++i)
                for (int j = 0; j < te.w; ++j) {
                    double gg = dG.at(ch, i, j);
                    dTe.at(ch, i, j) = gg * gca_cache.gate[ch];
                    dGate[ch] += gg * te.at(ch, i, j);
                }
        std::vector<double> dGatePre(C), dHid(Cr, 0.0), dPool(C, 0.0);
        for (int ch = 0; ch < C; ++ch)
            dGatePre[ch] = dGate[ch] * gca_cache.gate[ch] * (1.0 - gca_cache.gate[ch]);
        for (int r = 0; r < Cr; ++r)
            for (int ch = 0; ch < C; ++ch)
                dHid[r] += p.gca_w2[static_cast<size_t>(r) * C + ch] * dGatePre[ch];
        for (int r = 0; r < Cr; ++r) {
            double dpre = dHid[r] * dsilu(gca_cache.hid_pre[r]);
            for (int ch = 0; ch < C; ++ch)
                dPool[ch] += p.gca_w1[static_cast<size_t>(ch) * Cr + r] * dpre;
        }
        for (int ch = 0; ch < C; ++ch) {
            double spread = dPool[ch] * inv_hw;
            for (int i = 0; i < te.h; ++i)
                for (int j = 0; j < te.w; ++j) dTe.at(ch, i, j) += spread;
        }
    }

    // TE backward (input grad only)
    Tensor3 dZcomb;
    {
        Tensor3 dAct;
        conv3x3_vjp_input(dTe, p.te_conv_k, p.channels, dAct);
        Tensor3 dMod(te.ch, te.h, te.w);
        for (size_t i = 0; i < dMod.size(); ++i)
            dMod.v[i] = dAct.v[i] * dsilu(te_cache.mod_pre_act.v[i]);
        Tensor3 dXhat(te.ch, te.h, te.w);
        for (int ch = 0; ch < te.ch; ++ch)
            for (int i = 0; i < te.h; ++i)
                for (int j = 0; j < te.w; ++j) dXhat.at(ch, i, j) = dMod.at(ch, i, j) * gamma[ch];
        dZcomb = group_norm_vjp(dXhat, te_cache.gn);
    }

    Tensor3 dZp = dZcomb;
    if (attend) {
        Grid dUpd = tokens_of(dZcomb); // N_v x d
        Grid dCa = matmul_Bt(dUpd, p.Wo);
        AttentionGrads ag;
        attention_backward(text, zt, p, attn_cache, dCa, ag);
        Tensor3 dZt = tokens_to_tensor(ag.dZim, z_im.h, z_im.w);
        for (size_t i = 0; i < dZp.size(); ++i) dZp.v[i] += dZt.v[i];
    }

    Tensor3 dA(a.ch, a.h, a.w);
    for (size_t i = 0; i < dA.size(); ++i) dA.v[i] = dZp.v[i] * dsilu(a.v[i]);
    Tensor3 dIn;
    conv3x3_vjp_input(dA, p.conv_block_k, p.channels, dIn);
    for (size_t i = 0; i < dZim.size(); ++i) dZim.v[i] += dIn.v[i];

    return out;
}

// ---- parameter serialization ----

namespace {

struct NamedTensor {
    const char* name;
    std::vector<double>* data;
    int rows, cols;
};

std::vector<NamedTensor> tensor_table(BlockParams& p) {
    return {
        {"Wq", &p.Wq.values(), p.channels, p.d_h},
        {"Wk", &p.Wk.values(), p.channels, p.d_h},
        {"Wv", &p.Wv.values(), p.channels, p.d_h},
        {"Wo", &p.Wo.values(), p.d_h, p.channels},
        {"conv_block_k", &p.conv_block_k, p.channels * p.channels, 9},
        {"conv_block_b", &p.conv_block_b, p.channels, 1},
        {"te_w1", &p.te_w1, p.time_feat, p.time_hidden},
        {"te_b1", &p.te_b1, p.time_hidden, 1},
        {"te_w2", &p.te_w2, p.time_hidden, 2 * p.channels},
        {"te_b2", &p.te_b2, 2 * p.channels, 1},
        {"te_conv_k", &p.te_conv_k, p.channels * p.channels, 9},
        {"te_conv_b", &p.te_conv_b, p.channels, 1},
        {"gca_w1", &p.gca_w1, p.channels, p.gca_hidden},
        {"gca_b1", &p.gca_b1, p.gca_hidden, 1},
        {"gca_w2", &p.gca_w2, p.gca_hidden, p.channels},
        {"gca_b2", &p.gca_b2, p.channels, 1},
        {"out_conv_k", &p.out_conv_k, p.channels * p.channels, 9},
        {"out_conv_b", &p.out_conv_b, p.channels, 1},
    };
}

} // namespace

void save_block_params(const std::string& path_prefix, const BlockParams& p) {
    BlockParams& mp = const_cast<BlockParams&>(p);
    auto table = tensor_table(mp);
    std::ostringstream manifest;
    manifest << "channels = " << p.channels << "\n";
    manifest << "d_h = " << p.d_h << "\n";
    manifest << "time_feat = " << p.time_feat << "\n";
    manifest << "time_hidden = " << p.time_hidden << "\n";
    manifest << "gca_hidden = " << p.gca_hidden << "\n";
    manifest << "conventional_attention = " << (p.conventional_attention ? 1 : 0) << "\n";
    std::string blob;
    for (const auto& t : table) {
        manifest << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
        const char* bytes = reinterpret_cast<const char*>(t.data->data());
        blob.append(bytes, t.data->size() * sizeof(double));
    }
    atomic_write_text(path_prefix + ".manifest", manifest.str());
    atomic_write_text(path_prefix + ".tensors", blob);
}

BlockParams load_block_params(const std::string& path_prefix) {
    std::istringstream manifest(read_text(path_prefix + ".manifest"));
    std::string line;
    int channels = 0, d_h = 0, time_feat = 16, time_hidden = 32, gca_hidden = 0, conventional = 0;
    std::vector<std::pair<std::string, std::pair<int, int>>> tensors;
    while (std::getline(manifest, line)) {
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "tensor") {
            std::string name;
            int r, c;
            in >> name >> r >> c;
            tensors.emplace_back(name, std::make_pair(r, c));
        } else if (!key.empty()) {
            std::string eq;
            long v;
            in >> eq >> v;
            if (key == "channels") channels = static_cast<int>(v);
            else if (key == "d_h") d_h = static_cast<int>(v);
            else if (key == "time_feat") time_feat = static_cast<int>(v);
            else if (key == "time_hidden") time_hidden = static_cast<int>(v);
            else if (key == "gca_hidden") gca_hidden = static_cast<int>(v);
            else if (key == "conventional_attention") conventional = static_cast<int>(v);
            else throw config_error("unknown manifest key '" + key + "'");
        }
    }
    BlockParams p = BlockParams::zeros(channels, d_h);
    p.time_feat = time_feat;
    p.time_hidden = time_hidden;
    p.gca_hidden = gca_hidden;
    p.conventional_attention = conventional != 0;
    // re-zero with possibly customized sizes
    p.te_w1.assign(static_cast<size_t>(time_feat) * time_hidden, 0.0);
    p.te_b1.assign(time_hidden, 0.0);
    p.te_w2.assign(static_cast<size_t>(time_hidden) * 2 * channels, 0.0);
    p.te_b2.assign(2 * channels, 0.0);
    p.gca_w1.assign(static_cast<size_t>(channels) * gca_hidden, 0.0);
    p.gca_b1.assign(gca_hidden, 0.0);
    p.gca_w2.assign(static_cast<size_t>(gca_hidden) * channels, 0.0);
    p.gca_b2.assign(channels, 0.0);

    std::string blob = read_text(path_prefix + ".tensors");
    auto table = tensor_table(p);
    size_t offset = 0;
    if (tensors.size() != table.size())
        throw config_error("block params manifest lists an unexpected tensor count");
    for (size_t i = 0; i < table.size(); ++i) {
        if (tensors[i].first != table[i].name)
            throw config_error("block params manifest order mismatch at '" + tensors[i].first +
                               "'");
        size_t n = static_cast<size_t>(tensors[i].second.first) * tensors[i].second.second;
        if (table[i].data->size() != n)
            throw config_error("block params tensor '" + tensors[i].first + "' has wrong shape");
        if (offset + n * sizeof(double) > blob.size())
            throw config_error("block params tensor file truncated");
        std::memcpy(table[i].data->data(), blob.data() + offset, n * sizeof(double));
        offset += n * sizeof(double);
    }
    return p;
}

// ---- toy priors ----

namespace {

class ZeroPrior final : public PriorModel {
  public:
    void evaluate(const Image& x, const PriorInput&, Image& velocity, Image& score) const override {
        velocity = Image(x.height(), x.width(), 0.0);
        score = Image(x.height(), x.width(), 0.0);
    }
};

// One explicit TV-prox-style denoising step; score and velocity follow the
// denoiser convention s = (den - x)/sigma^2, v = sigma/2 * s.
class TvDenoiserPrior final : public PriorModel {
  public:
    explicit TvDenoiserPrior(double strength) : strength_(strength) {}

    void evaluate(const Image& x, const PriorInput& in, Image& velocity,
                  Image& score) const override {
        double sigma = std::max(in.sigma, 1e-8);
        GradField g = grad_operator(x);
        GradField gs = soft_threshold_isotropic(g, strength_ * sigma);
        g.gx -= gs.gx;
        g.gy -= gs.gy;
        Image rough = grad_adjoint(g); // points along increasing TV
        Image den = x;
        den.grid.axpy(-0.25, rough.grid); // 1/4 stabilizes the D^T D step
        score = Image(den.grid - x.grid);
        score.grid *= 1.0 / (sigma * sigma);
        velocity = score;
        velocity.grid *= 0.5 * sigma;
    }

  private:
    double strength_;
};

// Per-channel 2x pooling / bilinear upsampling between the two levels.
Tensor3 pool2(const Tensor3& t) {
    Tensor3 out(t.ch, t.h / 2, t.w / 2);
    for (int c = 0; c < t.ch; ++c)
        for (int i = 0; i < out.h; ++i)
            for (int j = 0; j < out.w; ++j)
                out.at(c, i, j) = 0.25 * (t.at(c, 2 * i, 2 * j) + t.at(c, 2 * i, 2 * j + 1) +
                                          t.at(c, 2 * i + 1, 2 * j) +
                                          t.at(c, 2 * i + 1, 2 * j + 1));
    return out;
}

Tensor3 up2(const Tensor3& t) {
    Tensor3 out(t.ch, t.h * 2, t.w * 2);
    for (int c = 0; c < t.ch; ++c) {
        Image plane(t.h, t.w);
        for (int i = 0; i < t.h; ++i)
            for (int j = 0; j < t.w; ++j) plane(i, j) = t.at(c, i, j);
        Image big = upsample_bilinear(plane, 2);
        for (int i = 0; i < out.h; ++i)
            for (int j = 0; j < out.w; ++j) out.at(c, i, j) = big(i, j);
    }
    return out;
}

// Two-level network around the conditional encoder block: block at the work
// resolution, block at half resolution, skip-combined, then projected back
// to a denoising delta.
class TinyBlockNetPrior final : public PriorModel {
  public:
    TinyBlockNetPrior(int channels, int d_h, uint64_t seed)
        : level1_(BlockParams::random_init(channels, d_h, seed)),
          level2_(BlockParams::random_init(channels, d_h, splitmix64(seed + 1))) {
        CounterRng rng(splitmix64(seed ^ 0x7e57ab1e));
        lift_w_.resize(static_cast<size_t>(channels) * 2);
        lift_b_.resize(channels);
        proj_w_.resize(channels);
        uint64_t idx = 0;
        for (double& v : lift_w_) v = 0.5 * rng.gaussian(2, idx++);
        for (double& v : lift_b_) v = 0.1 * rng.gaussian(2, idx++);
        for (double& v : proj_w_) v = 0.5 * rng.gaussian(2, idx++);
        proj_b_ = 0.0;
    }

    const BlockParams& params() const { return level1_; }

    void evaluate(const Image& x, const PriorInput& in, Image& velocity,
                  Image& score) const override {
        double sigma = std::max(in.sigma, 1e-8);
        // work on a pooled grid so token-level attention stays small
        int factor = 1;
        while ((x.height() / factor) > 16 && (x.height() % (factor * 2)) == 0 &&
               (x.width() % (factor * 2)) == 0)
            factor *= 2;
        Image xs = factor > 1 ? downsample_average(x, factor) : x;
        Image cs;
        bool has_coarse = in.coarse != nullptr;
        if (has_coarse) {
            if (in.coarse->height() != x.height() || in.coarse->width() != x.width())
                throw shape_error("tiny_block_net: coarse image resolution mismatch");
            cs = factor > 1 ? downsample_average(*in.coarse, factor) : *in.coarse;
        }

        int C = level1_.channels, h = xs.height(), w = xs.width();
        Tensor3 feat(C, h, w);
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    feat.at(c, i, j) = lift_w_[2 * c] * xs(i, j) +
                                       (has_coarse ? lift_w_[2 * c + 1] * cs(i, j) : 0.0) +
                                       lift_b_[c];

        Grid empty;
        const Grid& tokens = (in.tokens && in.tokens->rows() > 0) ? *in.tokens : empty;
        double h_time = log_snr(sigma);

        Tensor3 top = encoder_block_forward(feat, tokens, h_time, level1_);
        Tensor3 out = top;
        if (h % 2 == 0 && w % 2 == 0 && h >= 4 && w >= 4) {
            Tensor3 deep = up2(encoder_block_forward(pool2(top), tokens, h_time, level2_));
            for (size_t i = 0; i < out.size(); ++i) out.v[i] += deep.v[i];
        }

        Image delta_s(h, w);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = proj_b_;
                for (int c = 0; c < C; ++c) acc += proj_w_[c] * out.at(c, i, j);
                delta_s(i, j) = acc;
            }
        Image delta = factor > 1 ? upsample_bilinear(delta_s, factor) : delta_s;

        score = delta;
        score.grid *= 1.0 / (sigma * sigma);
        velocity = score;
        velocity.grid *= 0.5 * sigma;
    }

  private:
    BlockParams level1_, level2_;
    std::vector<double> lift_w_, lift_b_, proj_w_;
    double proj_b_;
};

} // namespace

std::shared_ptr<PriorModel> make_toy_prior(ToyPriorKind kind, const ToyPriorConfig& cfg) {
    switch (kind) {
        case ToyPriorKind::zero: return std::make_shared<ZeroPrior>();
        case ToyPriorKind::tv_denoiser: return std::make_shared<TvDenoiserPrior>(cfg.tv_strength);
        case ToyPriorKind::tiny_block_net:
            return std::make_shared<TinyBlockNetPrior>(cfg.channels, cfg.d_h, cfg.seed);
    }
    throw config_error("unknown toy prior kind");
}

Grid embed_prompt(const std::string& prompt, int dim, int num_tokens, uint64_t seed) {
    if (dim <= 0 || num_tokens <= 0)
        throw config_error("embed_prompt: dim and num_tokens must be positive");
    if (prompt.empty()) return Grid();
    Grid m(num_tokens, dim);
    std::istringstream in(prompt);
    std::string word;
    uint64_t seed_mix = splitmix64(seed + 0x5eedULL);
    while (in >> word) {
        uint64_t h1 = splitmix64(fnv1a64(word) ^ seed_mix);
        uint64_t h2 = splitmix64(h1);
        uint64_t h3 = splitmix64(h2);
        int row = static_cast<int>(h1 % static_cast<uint64_t>(num_tokens));
        int col = static_cast<int>(h2 % static_cast<uint64_t>(dim));
        m(row, col) += (h3 & 1) ? 1.0 : -1.0;
    }
    for (int r = 0; r < num_tokens; ++r) {
        double n2 = 0.0;
        for (int c = 0; c < dim; ++c) n2 += m(r, c) * m(r, c);
        if (n2 > 0.0) {
            double inv = 1.0 / std::sqrt(n2);
            for (int c = 0; c < dim; ++c) m(r, c) *= inv;
        }
    }
    return m;
}

Grid embed_metadata(const MetadataRecord& record, int dim, int num_tokens, uint64_t seed,
                    bool allow_empty) {
    std::string prompt = render_prompt(record);
    if (prompt.empty() && !allow_empty)
        throw config_error("embed_metadata: rendered prompt is empty");
    return embed_prompt(prompt, dim, num_tokens, seed);
}

} // namespace lact
