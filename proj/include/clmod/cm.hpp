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
#include "clmod/matrix.hpp"
#include "clmod/optim.hpp"

namespace clmod {

// Softmax autoencoder: gamma = softmax(x w_enc + b_enc), x_rec = gamma w_dec + b_dec.
// Biases are stored as 1-row matrices.
struct CmParams {
    Matrix w_enc;  // d×K
    Matrix b_enc;  // 1×K
    Matrix w_dec;  // K×d
    Matrix b_dec;  // 1×d

    std::size_t k() const { return w_dec.rows(); }
    std::size_t dim() const { return w_dec.cols(); }
    void validate() const;
};

// Raw term values; `total` applies the term weights used to compute it.
struct CmLossBreakdown {
    double e_rec = 0.0;    // sum ||x - x_rec||^2
    double e_gini = 0.0;   // sum_i sum_k g(1-g) ||mu_k||^2
    double e_cross = 0.0;  // sum_i sum_{k!=l} g_k g_l mu_k.mu_l
    double e_prior = 0.0;  // sum_k (1 - alpha_k) log mean_gamma_k
    double total = 0.0;

    CmLossBreakdown& operator+=(const CmLossBreakdown& o);
};

enum class PriorMode { symmetric, sorted };
enum class InitScheme { random, kmeanspp };

PriorMode parse_prior_mode(const std::string& name);
InitScheme parse_init_scheme(const std::string& name);
std::string to_string(PriorMode mode);
std::string to_string(InitScheme scheme);

// Multipliers on each term of the loss; 0 removes a term (ablation).
struct CmTermWeights {
    double rec = 1.0;
    double gini = 1.0;
    double cross = 1.0;
    double prior = 1.0;
};

struct CmTrainConfig {
    std::vector<double> alpha;  // length K, every entry > 0
    std::size_t batch_size = 20;
    std::size_t epochs = 150;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    InitScheme init = InitScheme::random;
    PriorMode prior_mode = PriorMode::symmetric;
    CmTermWeights terms;
    bool averaging_epoch = true;
    double init_std = 0.01;
    // Keep the centroid matrix after every iteration of the averaging epoch.
    bool keep_snapshots = false;
};

struct CmForward {
    Matrix gamma;
    Matrix x_rec;
};

CmForward cm_forward(const Matrix& x, const CmParams& p);

// Row k = w_dec[k] + b_dec.
Matrix extract_centroids(const CmParams& p);

std::vector<int> cm_predict(const Matrix& x, const CmParams& p);

// Per-cluster weight (1 - alpha) multiplying log mean_gamma. Sorted mode pairs
// the largest alpha with the largest mean responsibility, and so on.
std::vector<double> prior_weights(std::span<const double> alpha, std::span<const double> mean_gamma,
                                  PriorMode mode);

// Direct evaluation. mean_gamma is the mean of `gamma` over its rows and is
// clamped at 1e-12 inside the log. Throws NumericalError naming the first
// non-finite term.
CmLossBreakdown cm_loss(const Matrix& x, const Matrix& gamma, const Matrix& x_rec, const CmParams& p,
                        std::span<const double> alpha, PriorMode mode, const CmTermWeights& w = {});

// | sum_k g_k ||x-mu_k||^2 - (||x-x_rec||^2 + gini - cross) | with x_rec = sum g_k mu_k.
double q_expansion_identity_check(std::span<const double> x_row, std::span<const double> gamma_row,
                                  const Matrix& mu);

// w_dec = centroids, w_enc = pseudo_inverse(centroids), zero biases. With
// more centroids than dimensions the encoder is instead the equal-variance
// Gaussian posterior: w_enc = centroids^T, b_enc = -||mu_k||^2 / 2.
CmParams cm_init_from_centroids(const Matrix& centroids);
// Weights ~ Normal(0, std), zero biases.
CmParams cm_random_init(std::size_t d, std::size_t k, Rng& rng, double std = 0.01);

// Sparsity score over the whole dataset: e_gini + e_cross, or e_gini - e_cross
// when `signed_cross` is set.
double l_sp(const Matrix& x, const CmParams& p, bool signed_cross = false);

// Tape versions used for training and for composition inside larger models.
struct CmVars {
    ad::Var w_enc, b_enc, w_dec, b_dec;
};

struct CmGraph {
    ad::Var gamma;
    ad::Var x_rec;
    ad::Var mu;     // K×d centroids
    ad::Var e_rec;
    ad::Var e_gini;   // only when built with sparsity terms
    ad::Var e_cross;  // only when built with sparsity terms
    ad::Var e_prior;
};

CmVars cm_leaves(ad::Tape& tape, const CmParams& p);
CmGraph cm_graph(ad::Var x, const CmVars& v, std::span<const double> alpha, PriorMode mode,
                 bool sparsity_terms = true);
ad::Var cm_total(const CmGraph& g, const CmTermWeights& w);
CmLossBreakdown cm_breakdown(const CmGraph& g, const CmTermWeights& w);

struct CmEpochRecord {
    std::size_t epoch = 0;
    CmLossBreakdown loss;  // summed over the mini-batches of the epoch
    bool averaging = false;
};

using CmEpochHook = std::function<void(std::size_t epoch, const CmParams&)>;

struct CmTrainResult {
    CmParams params;
    std::vector<CmEpochRecord> history;
    std::vector<Matrix> snapshots;  // filled when keep_snapshots is set
};

// Mini-batch training. After the regular epochs, one averaging pass keeps
// updating only the decoder (w_dec, b_dec) and replaces it by the mean of
// its per-iteration values. Throws DivergenceError on a non-finite term.
CmTrainResult train_cm(const Matrix& x, std::size_t k, const CmTrainConfig& config,
                       const CmEpochHook& hook = {});
CmTrainResult train_cm_from(const Matrix& x, CmParams init, const CmTrainConfig& config, Rng& rng,
                            const CmEpochHook& hook = {});

// Checks config against data; throws ConfigError.
void validate_cm_config(const CmTrainConfig& config, std::size_t n, std::size_t k);

// Concentration and batch size tuned per dataset.
struct CmPreset {
    double alpha;
    std::size_t batch_size;
};

std::optional<CmPreset> cm_preset(std::string_view dataset);

}  // namespace clmod
