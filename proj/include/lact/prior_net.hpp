#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lact/grid.hpp"
#include "lact/metadata.hpp"
#include "lact/prior.hpp"
#include "lact/tensor3.hpp"

namespace lact {

/// Learnable tensors of one conditional encoder/decoder block. channels is
/// both the feature-map depth and the token embedding dim d; d_h <= d is the
/// attention projection dim. Immutable after construction.
struct BlockParams {
    int channels = 0; // token embedding dim d
    int d_h = 0;
    int time_feat = 16;   // sinusoidal encoding size
    int time_hidden = 32; // time-MLP hidden width
    int gca_hidden = 0;   // channel-attention bottleneck
    bool conventional_attention = false; // queries from image instead of text

    Grid Wq, Wk, Wv; // d x d_h
    Grid Wo;         // d_h x d, attention output projection

    std::vector<double> conv_block_k, conv_block_b; // C*C*3*3, C
    std::vector<double> te_w1, te_b1;               // F*H, H
    std::vector<double> te_w2, te_b2;               // H*2C, 2C (zero at init)
    std::vector<double> te_conv_k, te_conv_b;       // C*C*3*3, C
    std::vector<double> gca_w1, gca_b1;             // C*Cr, Cr
    std::vector<double> gca_w2, gca_b2;             // Cr*C, C
    std::vector<double> out_conv_k, out_conv_b;     // C*C*3*3, C

    /// All-zero parameters (the residual-identity configuration).
    static BlockParams zeros(int channels, int d_h);

    /// Small random weights; the time-MLP output layer stays zero unless
    /// nonzero_time_mlp is set.
    static BlockParams random_init(int channels, int d_h, uint64_t seed,
                                   bool nonzero_time_mlp = false);
};

/// Flat binary tensor file (little-endian doubles) plus a text manifest of
/// names and shapes, so fixed random weights reproduce across runs.
void save_block_params(const std::string& path_prefix, const BlockParams& p);
BlockParams load_block_params(const std::string& path_prefix);

// ---- Cross-attention (queries and keys from text, values from image) ----

struct AttentionGrads {
    Grid dWq, dWk, dWv;
    Grid dZtx, dZim;
};

/// Returns the attended image tokens (N_v x d_h). N_t = 0 yields a zero
/// update of shape N_v x d_h. Rows of the internal softmax sum to 1.
Grid cross_attention(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p);

/// Forward plus reverse-mode gradients against a seed cotangent dOut.
Grid cross_attention_vjp(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p,
                         const Grid& dOut, AttentionGrads& grads);

/// The attention matrix (rows sum to 1) for property tests.
Grid cross_attention_matrix(const Grid& z_tx, const Grid& z_im_tokens, const BlockParams& p);

// ---- Time embedding with FiLM modulation ----

struct TimeEmbedGrads {
    std::vector<double> dW1, dB1, dW2, dB2;
    std::vector<double> dConvK, dConvB;
    Tensor3 dFeatures;
};

/// sinusoid(log-SNR) -> MLP -> per-channel (gamma, beta) FiLM over
/// group-normalized features -> SiLU -> 3x3 conv.
Tensor3 time_embed_modulate(double h_time, const Tensor3& features, const BlockParams& p);

Tensor3 time_embed_modulate_vjp(double h_time, const Tensor3& features, const BlockParams& p,
                                const Tensor3& dOut, TimeEmbedGrads& grads);

/// Test hook: bypass the MLP and inject (gamma, beta) directly.
Tensor3 time_embed_modulate_injected(const Tensor3& features, const BlockParams& p,
                                     const std::vector<double>& gamma,
                                     const std::vector<double>& beta);

// ---- Guided contextual attention (channel gating) ----

struct GcaGrads {
    std::vector<double> dW1, dB1, dW2, dB2;
    Tensor3 dFeatures;
};

/// Global-average-pool -> MLP -> sigmoid gates in (0,1) -> channel reweight.
/// unit_gates forces every gate to 1 (identity hook).
Tensor3 guided_contextual_attention(const Tensor3& features, const BlockParams& p,
                                    bool unit_gates = false);

Tensor3 guided_contextual_attention_vjp(const Tensor3& features, const BlockParams& p,
                                        const Tensor3& dOut, GcaGrads& grads);

// ---- Full encoder/decoder block ----

/// ConvBlock; residual cross-attention against (z_tx, time token); TE
/// modulation; GCA; conv; outer residual. All-zero params reproduce the
/// input bit-exactly.
Tensor3 encoder_block_forward(const Tensor3& z_im, const Grid& z_tx, double h_time,
                              const BlockParams& p);

/// Forward plus input gradient for a seed cotangent dOut.
Tensor3 encoder_block_vjp(const Tensor3& z_im, const Grid& z_tx, double h_time,
                          const BlockParams& p, const Tensor3& dOut, Tensor3& dZim);

// ---- Toy priors ----

enum class ToyPriorKind { zero, tv_denoiser, tiny_block_net };

struct ToyPriorConfig {
    double tv_strength = 0.1;   // tv_denoiser shrink fraction of sigma
    int channels = 4;           // tiny_block_net width (= token dim)
    int d_h = 4;
    uint64_t seed = 17;
};

std::shared_ptr<PriorModel> make_toy_prior(ToyPriorKind kind, const ToyPriorConfig& cfg = {});

/// Deterministic feature-hashing text embedder standing in for a language
/// encoder: whitespace tokens hashed into num_tokens buckets of dimension
/// dim, L2-normalized per bucket row.
Grid embed_metadata(const MetadataRecord& record, int dim, int num_tokens, uint64_t seed,
                    bool allow_empty = true);

/// Token matrix for an already-rendered prompt string.
Grid embed_prompt(const std::string& prompt, int dim, int num_tokens, uint64_t seed);

/// log-SNR of a noise scale, the block's time coordinate.
double log_snr(double sigma);

} // namespace lact
