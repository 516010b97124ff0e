#pragma once

#include <cstddef>
#include <vector>

#include "clmod/matrix.hpp"

namespace clmod {

// First centroid uniform over rows, each next one drawn with probability
// proportional to the squared distance to the nearest chosen centroid.
Matrix kmeans_pp_init(const Matrix& x, std::size_t k, Rng& rng);

// k distinct rows drawn uniformly (Forgy initialization).
Matrix random_rows_init(const Matrix& x, std::size_t k, Rng& rng);

struct KmeansResult {
    Matrix centroids;
    std::vector<int> labels;
    double inertia = 0.0;
    // Inertia after each assignment step; non-increasing.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
};

// Lloyd iterations from `init`. Stops when assignments are stable, the
// largest centroid shift is below `tol`, or after `max_iter` updates.
// A cluster left empty is re-seeded with the point farthest from its
// assigned centroid.
KmeansResult lloyd(const Matrix& x, const Matrix& init, std::size_t max_iter = 300,
                   double tol = 1e-10);

std::vector<int> nearest_centroid(const Matrix& x, const Matrix& centroids);
double inertia(const Matrix& x, const Matrix& centroids, const std::vector<int>& labels);

enum class CovarianceKind { isotropic, full };

struct GmmParams {
    CovarianceKind kind = CovarianceKind::isotropic;
    std::vector<double> weights;
    Matrix means;                    // K×d
    std::vector<double> variances;   // isotropic: sigma_k^2
    std::vector<Matrix> covariances; // full: d×d each
};

struct GmmResult {
    GmmParams params;
    Matrix responsibilities;  // N×K
    std::vector<double> loglik_trace;  // mean log-likelihood per point
    std::size_t iterations = 0;
    std::size_t jitter_events = 0;

    std::vector<int> labels() const;
};

// Parameters seeded from centroids: hard assignment to the nearest centroid
// gives the initial spreads; weights start uniform.
GmmParams gmm_from_centroids(const Matrix& x, const Matrix& centroids, CovarianceKind kind);

// Parameters from an M-step on soft assignments `resp` (N×K).
GmmParams gmm_from_responsibilities(const Matrix& x, const Matrix& resp, CovarianceKind kind);

// Rows drawn uniformly from [0,1)^K and normalized to sum to 1.
Matrix random_responsibilities(std::size_t n, std::size_t k, Rng& rng);

// EM with log-sum-exp responsibilities. The isotropic model keeps the
// mixture weights fixed at 1/K. Stops once the gain in mean log-likelihood
// drops below `tol`. A collapsed component is regularized with 1e-6 I; the
// tenth collapse raises NumericalError.
GmmResult em_gmm(const Matrix& x, GmmParams init, std::size_t max_iter = 150, double tol = 1e-6);

// Mean log-likelihood per point under `params`.
double gmm_mean_loglik(const Matrix& x, const GmmParams& params);

}  // namespace clmod
