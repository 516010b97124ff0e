#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clmod/autodiff.hpp"
#include "clmod/cm.hpp"
#include "clmod/matrix.hpp"
#include "clmod/optim.hpp"

namespace clmod {

enum class Activation { leaky_relu, linear };

inline constexpr double kLeakySlope = 0.2;

struct MlpLayer {
    Matrix weights;  // in×out
    Matrix bias;     // 1×out
    Activation activation = Activation::linear;

    std::size_t in() const { return weights.rows(); }
    std::size_t out() const { return weights.cols(); }
};

// Layer widths. The encoder maps the input through `encoder` (last entry is
// the code size p); the decoder goes back through `decoder` hidden widths and
// ends at the input size. Without an explicit decoder the hidden widths of
// the encoder are mirrored. An empty encoder means identity maps on both
// sides (the CM then sees the data itself).
struct AecmArch {
    std::size_t input_dim = 0;
    std::vector<std::size_t> encoder;
    std::optional<std::vector<std::size_t>> decoder;
    // Fixed degree-2 monomial expansion in front of the first dense layer
    // (input_dim must be 2).
    bool quadratic_input = false;

    // d-h-d with a single dense layer each way.
    static AecmArch shallow(std::size_t d, std::size_t code);
    static AecmArch identity(std::size_t d);
    std::size_t code_dim() const;
};

struct AecmParams {
    std::vector<MlpLayer> encoder_layers;
    std::vector<MlpLayer> decoder_layers;
    bool quadratic_input = false;
    CmParams cm;  // on the code space

    std::size_t input_dim() const;
    std::size_t code_dim() const { return cm.dim(); }
    std::size_t k() const { return cm.k(); }
    void validate() const;
};

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases. Hidden layers use
// leaky ReLU, the last encoder and last decoder layers are linear.
std::vector<MlpLayer> mlp_init(const std::vector<std::size_t>& widths, Rng& rng);
AecmParams aecm_random_init(const AecmArch& arch, std::size_t k, Rng& rng, double cm_std = 0.01);

// (x1, x2) -> (1, x1, x2, x1^2, x1 x2, x2^2, x2 x1).
Matrix quadratic_feature_layer(const Matrix& x);

Matrix mlp_forward(const Matrix& x, const std::vector<MlpLayer>& layers);
Matrix encode(const Matrix& x, const AecmParams& p);
Matrix decode(const Matrix& z, const AecmParams& p);

struct AecmForward {
    Matrix z;
    Matrix gamma;
    Matrix z_rec;
    Matrix x_rec;
};

AecmForward aecm_forward(const Matrix& x, const AecmParams& p);
std::vector<int> aecm_predict(const Matrix& x, const AecmParams& p);

struct AecmLossBreakdown {
    double rec_dae = 0.0;   // sum ||x - x_rec||^2
    double rec_cm = 0.0;    // sum ||z - z_rec||^2
    double sparsity = 0.0;  // sum gamma (1 - gamma)
    double prior = 0.0;     // sum_k (1 - alpha_k) log mean_gamma_k
    double ortho = 0.0;     // ||mu mu^T - I||_1
    double total = 0.0;

    AecmLossBreakdown& operator+=(const AecmLossBreakdown& o);
};

struct AecmLossWeights {
    double beta = 1.0;
    double lambda = 1.0;
};

// Entrywise l1 norm of the K×K Gram matrix of the rows of mu minus identity.
double ortho_penalty(const Matrix& mu);

// Direct evaluation from forward outputs. Throws NumericalError naming the
// first non-finite term.
AecmLossBreakdown aecm_loss(const Matrix& x, const AecmForward& f, const AecmParams& p,
                            std::span<const double> alpha, const AecmLossWeights& w,
                            PriorMode mode = PriorMode::symmetric);

// Tape versions.
struct AecmVars {
    std::vector<ad::Var> enc_w, enc_b, dec_w, dec_b;
    CmVars cm;
};

struct AecmGraph {
    ad::Var z;
    ad::Var x_rec;
    CmGraph cm;  // built without the centroid-norm sparsity terms
    ad::Var rec_dae;
    ad::Var sparsity;
    ad::Var ortho;
};

AecmVars aecm_leaves(ad::Tape& tape, const AecmParams& p);
ad::Var mlp_graph(ad::Var x, const std::vector<ad::Var>& w, const std::vector<ad::Var>& b,
                  const std::vector<MlpLayer>& layers);
ad::Var quadratic_feature_graph(ad::Var x);
AecmGraph aecm_graph(ad::Var x, const AecmVars& v, const AecmParams& p, std::span<const double> alpha,
                     PriorMode mode);
ad::Var aecm_total(const AecmGraph& g, const AecmLossWeights& w);
AecmLossBreakdown aecm_breakdown(const AecmGraph& g, const AecmLossWeights& w);

// Parameter tensors in a fixed order: encoder (w, b)..., decoder (w, b)...,
// then w_enc, b_enc, w_dec, b_dec of the CM.
std::vector<Matrix*> aecm_tensors(AecmParams& p);
std::vector<const Matrix*> aecm_tensors(const AecmParams& p);

struct PretrainConfig {
    std::size_t dae_epochs = 50;
    std::size_t cm_epochs = 20;
    // kmeanspp: seed the CM from k-means++ in the code space; random: keep
    // the random CM init.
    InitScheme init = InitScheme::kmeanspp;
};

struct AecmTrainConfig {
    std::vector<double> alpha;  // length K
    double beta = 1.0;
    double lambda = 1.0;
    std::size_t batch_size = 256;
    std::size_t epochs = 150;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    PriorMode prior_mode = PriorMode::symmetric;
    bool averaging_epoch = true;
    double cm_init_std = 0.01;
    std::optional<PretrainConfig> pretrain;  // none: start from random init
    // Keep the autoencoder layers fixed; only the CM is trained.
    bool freeze_autoencoder = false;
};

struct AecmEpochRecord {
    std::size_t epoch = 0;
    AecmLossBreakdown loss;
    bool averaging = false;
};

using AecmEpochHook = std::function<void(std::size_t epoch, const AecmParams&)>;

struct AecmTrainResult {
    AecmParams params;
    std::vector<AecmEpochRecord> history;
    std::vector<double> pretrain_dae_loss;  // per pre-training epoch
    bool pretrain_fell_back = false;        // embedded centroids were rank deficient
};

void validate_aecm_config(const AecmTrainConfig& config, std::size_t n, std::size_t k);

// Stage 1: the autoencoder alone on sum ||x - x_rec||^2. Stage 2: k-means++
// in the code space and cm_init_from_centroids (random CM init when the
// centroids are rank deficient). Stage 3: the CM alone on the embedded data.
AecmParams pretrain(const Matrix& x, AecmParams init, const AecmTrainConfig& config, const PretrainConfig& pc,
                    Rng& rng, std::vector<double>* dae_loss = nullptr, bool* fell_back = nullptr);

// Joint training of every tensor with the configured optimizer, followed by
// an averaging pass that updates and averages only the CM decoder.
AecmTrainResult train_aecm(const Matrix& x, std::size_t k, const AecmArch& arch, const AecmTrainConfig& config,
                           const AecmEpochHook& hook = {});
AecmTrainResult train_aecm_from(const Matrix& x, AecmParams init, const AecmTrainConfig& config, Rng& rng,
                                const AecmEpochHook& hook = {});

// Input-space image of centroid k.
std::vector<double> decode_centroid(const AecmParams& p, std::size_t k);
// decoder((1 - t) mu_k1 + t mu_k2) for `steps` evenly spaced t in [0, 1].
std::vector<std::vector<double>> interpolate(const AecmParams& p, std::size_t k1, std::size_t k2,
                                             std::size_t steps);

struct AecmPreset {
    double alpha;
    std::size_t batch_size;
    double beta;
    double lambda;
    std::size_t code_dim;
};

std::optional<AecmPreset> aecm_preset(std::string_view dataset);

}  // namespace clmod
