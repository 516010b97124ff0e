#include "clmod/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clmod/error.hpp"

namespace clmod {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_k(const Matrix& x, std::size_t k, const char* who) {
    if (k == 0) throw DomainError(std::string(who) + ": k must be positive");
    if (k > x.rows()) {
        throw DomainError(std::string(who) + ": k=" + std::to_string(k) + " exceeds N=" +
                          std::to_string(x.rows()));
    }
}

// Lower-triangular Cholesky factor; returns false when a pivot is not
// positive.
bool cholesky(const Matrix& a, Matrix& l) {
    const std::size_t n = a.rows();
    l = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(s > 1e-12)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

struct ComponentDensity {
    // Isotropic: log normalizer and inverse variance. Full: Cholesky factor.
    double log_norm = 0.0;
    double inv_var = 0.0;
    Matrix chol;
};

std::vector<ComponentDensity> prepare(const GmmParams& p, std::size_t d) {
    const std::size_t k = p.means.rows();
    std::vector<ComponentDensity> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (p.kind == CovarianceKind::isotropic) {
            const double var = p.variances[c];
            out[c].inv_var = 1.0 / var;
            out[c].log_norm = -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(var));
        } else {
            if (!cholesky(p.covariances[c], out[c].chol)) {
                throw NumericalError("em_gmm: covariance of component " + std::to_string(c) +
                                     " is not positive definite");
            }
            double logdet = 0.0;
            for (std::size_t i = 0; i < d; ++i) logdet += 2.0 * std::log(out[c].chol(i, i));
            out[c].log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
        }
    }
    return out;
}

// Fills log(w_k) + log N(x_i | component k) into `logp` and returns the
// total log-likelihood; `resp` receives the normalized responsibilities.
double e_step(const Matrix& x, const GmmParams& p, Matrix& resp) {
    const std::size_t n = x.rows(), d = x.cols(), k = p.means.rows();
    const auto dens = prepare(p, d);
    resp = Matrix(n, k);
    std::vector<double> diff(d), sol(d);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        auto r = resp.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            auto mu = p.means.row(c);
            double quad;
            if (p.kind == CovarianceKind::isotropic) {
                quad = squared_distance(xi, mu) * dens[c].inv_var;
            } else {
                for (std::size_t j = 0; j < d; ++j) diff[j] = xi[j] - mu[j];
                const Matrix& l = dens[c].chol;
                quad = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    double s = diff[a];
                    for (std::size_t b = 0; b < a; ++b) s -= l(a, b) * sol[b];
                    sol[a] = s / l(a, a);
                    quad += sol[a] * sol[a];
                }
            }
            r[c] = std::log(p.weights[c]) + dens[c].log_norm - 0.5 * quad;
        }
        const double mx = *std::max_element(r.begin(), r.end());
        double s = 0.0;
        for (double v : r) s += std::exp(v - mx);
        const double lse = mx + std::log(s);
        for (double& v : r) v = std::exp(v - lse);
        total += lse;
    }
    return total;
}

}  // namespace

Matrix kmeans_pp_init(const Matrix& x, std::size_t k, Rng& rng) {
    check_k(x, k, "kmeans_pp_init");
    const std::size_t n = x.rows();
    Matrix centroids(k, x.cols());
    std::size_t first = rng.uniform_index(n);
    std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(x.row(i), centroids.row(0));
    std::vector<char> chosen(n, 0);
    chosen[first] = 1;

    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist[i];
                if (dist[i] > 0.0 && target < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                // Round-off pushed the target past the last positive weight.
                for (std::size_t i = n; i-- > 0;)
                    if (dist[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        } else {
            // Zero mass: every point sits on a chosen centroid.
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) free.push_back(i);
            pick = free[rng.uniform_index(free.size())];
        }
        chosen[pick] = 1;
        std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = std::min(dist[i], squared_distance(x.row(i), centroids.row(c)));
    }
    return centroids;
}

Matrix random_rows_init(const Matrix& x, std::size_t k, Rng& rng) {
    check_k(x, k, "random_rows_init");
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.uniform_index(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return x.select_rows(idx);
}

std::vector<int> nearest_centroid(const Matrix& x, const Matrix& centroids) {
    std::vector<int> labels(x.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(x.row(i), centroids.row(c));
            if (d < best) {
                best = d;
                labels[i] = static_cast<int>(c);
            }
        }
    }
    return labels;
}

double inertia(const Matrix& x, const Matrix& centroids, const std::vector<int>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        s += squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
    return s;
}

KmeansResult lloyd(const Matrix& x, const Matrix& init, std::size_t max_iter, double tol) {
    if (init.cols() != x.cols()) throw DimensionError("lloyd: centroid width differs from data");
    check_k(x, init.rows(), "lloyd");
    const std::size_t n = x.rows(), d = x.cols(), k = init.rows();

    KmeansResult res;
    res.centroids = init;
    res.labels = nearest_centroid(x, res.centroids);
    res.inertia_trace.push_back(inertia(x, res.centroids, res.labels));

    for (std::size_t it = 0; it < max_iter; ++it) {
        Matrix next(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(res.labels[i]);
            ++counts[c];
            auto row = next.row(c);
            auto xi = x.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] += xi[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (double& v : next.row(c)) v /= static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto own = static_cast<std::size_t>(res.labels[i]);
                if (counts[own] <= 1) continue;
                const double dd = squared_distance(x.row(i), next.row(own));
                if (dd > far_d) {
                    far_d = dd;
                    far = i;
                }
            }
            if (far_d < 0.0) continue;
            --counts[static_cast<std::size_t>(res.labels[far])];
            counts[c] = 1;
            res.labels[far] = static_cast<int>(c);
            std::copy(x.row(far).begin(), x.row(far).end(), next.row(c).begin());
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            shift = std::max(shift, squared_distance(next.row(c), res.centroids.row(c)));
        res.centroids = std::move(next);
        ++res.iterations;

        std::vector<int> labels = nearest_centroid(x, res.centroids);
        const double current = inertia(x, res.centroids, labels);
        const bool stable = labels == res.labels;
        // A reassignment that does not lower the objective is a tie; keep
        // the old labels so the trace stays monotone.
        if (current <= res.inertia_trace.back()) {
            res.labels = std::move(labels);
            res.inertia_trace.push_back(current);
        } else {
            res.inertia_trace.push_back(inertia(x, res.centroids, res.labels));
        }
        if (stable || std::sqrt(shift) < tol) break;
    }
    res.inertia = res.inertia_trace.back();
    return res;
}

std::vector<int> GmmResult::labels() const {
    std::vector<int> out(responsibilities.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto r = responsibilities.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

GmmParams gmm_from_centroids(const Matrix& x, const Matrix& centroids, CovarianceKind kind) {
    if (centroids.cols() != x.cols()) throw DimensionError("gmm_from_centroids: width mismatch");
    const std::size_t n = x.rows(), d = x.cols(), k = centroids.rows();
    GmmParams p;
    p.kind = kind;
    p.means = centroids;
    p.weights.assign(k, 1.0 / static_cast<double>(k));
    const auto labels = nearest_centroid(x, centroids);

    // Pooled spread, used for components that receive too few points.
    double pooled = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        pooled += squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
    pooled = std::max(pooled / static_cast<double>(n * d), 1e-6);

    if (kind == CovarianceKind::isotropic) {
        std::vector<double> ss(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            ss[c] += squared_distance(x.row(i), centroids.row(c));
            ++cnt[c];
        }
        p.variances.resize(k);
        for (std::size_t c = 0; c < k; ++c) {
            const double v = cnt[c] > 1 ? ss[c] / static_cast<double>(cnt[c] * d) : pooled;
            p.variances[c] = std::max(v, 1e-6);
        }
    } else {
        p.covariances.assign(k, Matrix(d, d));
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            ++cnt[c];
            auto xi = x.row(i);
            auto mu = centroids.row(c);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    p.covariances[c](a, b) += (xi[a] - mu[a]) * (xi[b] - mu[b]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (cnt[c] > d) {
                p.covariances[c] *= 1.0 / static_cast<double>(cnt[c]);
            } else {
                p.covariances[c] = pooled * Matrix::identity(d);
            }
            for (std::size_t a = 0; a < d; ++a) p.covariances[c](a, a) += 1e-6;
        }
    }
    return p;
}

double gmm_mean_loglik(const Matrix& x, const GmmParams& params) {
    Matrix resp;
    return e_step(x, params, resp) / static_cast<double>(x.rows());
}

namespace {

// M-step in place. Components with (near) zero mass keep their parameters;
// collapses are counted in `events`.
void m_step(const Matrix& x, const Matrix& r, GmmParams& p, std::size_t& events) {
    const std::size_t n = x.rows(), d = x.cols(), k = r.cols();
    const double nd = static_cast<double>(n);
    std::vector<double> nk(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) nk[c] += r(i, c);

    for (std::size_t c = 0; c < k; ++c) {
        if (nk[c] < 1e-10) {
            ++events;
            continue;
        }
        std::vector<double> mu(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) mu[j] += r(i, c) * x(i, j);
        for (double& v : mu) v /= nk[c];
        std::copy(mu.begin(), mu.end(), p.means.row(c).begin());

        if (p.kind == CovarianceKind::isotropic) {
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) ss += r(i, c) * squared_distance(x.row(i), mu);
            double var = ss / (nk[c] * static_cast<double>(d));
            if (!(var > 1e-10)) {
                ++events;
                var += 1e-6;
            }
            p.variances[c] = var;
        } else {
            Matrix cov(d, d);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = r(i, c);
                if (w == 0.0) continue;
                auto xi = x.row(i);
                for (std::size_t a = 0; a < d; ++a) {
                    const double da = w * (xi[a] - mu[a]);
                    for (std::size_t b = 0; b <= a; ++b) cov(a, b) += da * (xi[b] - mu[b]);
                }
            }
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b <= a; ++b) {
                    cov(a, b) /= nk[c];
                    cov(b, a) = cov(a, b);
                }
            Matrix l;
            if (!cholesky(cov, l)) {
                ++events;
                for (std::size_t a = 0; a < d; ++a) cov(a, a) += 1e-6;
            }
            p.covariances[c] = std::move(cov);
            p.weights[c] = nk[c] / nd;
        }
    }
    if (p.kind == CovarianceKind::full) {
        const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
        for (double& w : p.weights) w /= total;
    }
}

}  // namespace

Matrix random_responsibilities(std::size_t n, std::size_t k, Rng& rng) {
    if (k == 0) throw DomainError("random_responsibilities: k must be positive");
    Matrix r = sample_uniform(rng, n, k, 0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : r.row(i)) s += v;
        if (s <= 0.0) {
            for (double& v : r.row(i)) v = 1.0 / static_cast<double>(k);
        } else {
            for (double& v : r.row(i)) v /= s;
        }
    }
    return r;
}

GmmParams gmm_from_responsibilities(const Matrix& x, const Matrix& resp, CovarianceKind kind) {
    if (resp.rows() != x.rows()) throw DimensionError("gmm_from_responsibilities: row count mismatch");
    const std::size_t k = resp.cols(), d = x.cols();
    check_k(x, k, "gmm_from_responsibilities");
    GmmParams p;
    p.kind = kind;
    p.means = Matrix(k, d);
    p.weights.assign(k, 1.0 / static_cast<double>(k));
    if (kind == CovarianceKind::isotropic)
        p.variances.assign(k, 1.0);
    else
        p.covariances.assign(k, Matrix::identity(d));
    std::size_t events = 0;
    m_step(x, resp, p, events);
    if (kind == CovarianceKind::isotropic) p.weights.assign(k, 1.0 / static_cast<double>(k));
    return p;
}

GmmResult em_gmm(const Matrix& x, GmmParams init, std::size_t max_iter, double tol) {
    const std::size_t n = x.rows(), d = x.cols(), k = init.means.rows();
    if (init.means.cols() != d) throw DimensionError("em_gmm: means width differs from data");
    check_k(x, k, "em_gmm");
    if (init.kind == CovarianceKind::isotropic) {
        init.weights.assign(k, 1.0 / static_cast<double>(k));
        if (init.variances.size() != k) throw DimensionError("em_gmm: missing variances");
    } else if (init.covariances.size() != k) {
        throw DimensionError("em_gmm: missing covariances");
    }

    GmmResult res;
    res.params = std::move(init);
    const double nd = static_cast<double>(n);
    res.loglik_trace.push_back(e_step(x, res.params, res.responsibilities) / nd);

    for (std::size_t it = 0; it < max_iter; ++it) {
        GmmParams& p = res.params;
        m_step(x, res.responsibilities, p, res.jitter_events);
        if (p.kind == CovarianceKind::isotropic) p.weights.assign(k, 1.0 / static_cast<double>(k));
        if (res.jitter_events >= 10) {
            throw NumericalError("em_gmm: degenerate component collapsed " +
                                 std::to_string(res.jitter_events) + " times");
        }

        ++res.iterations;
        double ll;
        try {
            ll = e_step(x, p, res.responsibilities) / nd;
        } catch (const NumericalError&) {
            ++res.jitter_events;
            for (auto& cov : p.covariances)
                for (std::size_t a = 0; a < d; ++a) cov(a, a) += 1e-6;
            ll = e_step(x, p, res.responsibilities) / nd;
        }
        const double gain = ll - res.loglik_trace.back();
        res.loglik_trace.push_back(ll);
        if (gain < tol) break;
    }
    return res;
}

}  // namespace clmod
