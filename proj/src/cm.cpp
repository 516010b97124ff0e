#include "clmod/cm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clmod/baselines.hpp"
#include "clmod/error.hpp"

namespace clmod {

namespace {

constexpr double kLogFloor = 1e-12;

void require_term_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(std::string("cm_loss: term '") + term + "' is not finite");
}

void check_finite_terms(const CmLossBreakdown& b, std::size_t epoch) {
    const std::pair<double, const char*> terms[] = {
        {b.e_rec, "e_rec"}, {b.e_gini, "e_gini"}, {b.e_cross, "e_cross"}, {b.e_prior, "e_prior"}, {b.total, "total"}};
    for (const auto& [v, name] : terms)
        if (!std::isfinite(v)) throw DivergenceError(epoch, name);
}

}  // namespace

void CmParams::validate() const {
    const std::size_t d = w_enc.rows(), k = w_enc.cols();
    if (b_enc.rows() != 1 || b_enc.cols() != k || w_dec.rows() != k || w_dec.cols() != d ||
        b_dec.rows() != 1 || b_dec.cols() != d) {
        throw DimensionError("CmParams: inconsistent shapes (w_enc " + std::to_string(d) + "x" +
                             std::to_string(k) + ", w_dec " + std::to_string(w_dec.rows()) + "x" +
                             std::to_string(w_dec.cols()) + ")");
    }
}

CmLossBreakdown& CmLossBreakdown::operator+=(const CmLossBreakdown& o) {
    e_rec += o.e_rec;
    e_gini += o.e_gini;
    e_cross += o.e_cross;
    e_prior += o.e_prior;
    total += o.total;
    return *this;
}

PriorMode parse_prior_mode(const std::string& name) {
    if (name == "symmetric") return PriorMode::symmetric;
    if (name == "sorted") return PriorMode::sorted;
    throw ConfigError("unknown prior_mode '" + name + "' (expected symmetric or sorted)");
}

InitScheme parse_init_scheme(const std::string& name) {
    if (name == "random") return InitScheme::random;
    if (name == "kmeanspp") return InitScheme::kmeanspp;
    throw ConfigError("unknown init '" + name + "' (expected random or kmeanspp)");
}

std::string to_string(PriorMode mode) { return mode == PriorMode::sorted ? "sorted" : "symmetric"; }
std::string to_string(InitScheme scheme) { return scheme == InitScheme::kmeanspp ? "kmeanspp" : "random"; }

CmForward cm_forward(const Matrix& x, const CmParams& p) {
    p.validate();
    if (x.cols() != p.dim()) {
        throw DimensionError("cm_forward: data has " + std::to_string(x.cols()) + " columns, model expects " +
                             std::to_string(p.dim()));
    }
    Matrix logits = matmul(x, p.w_enc);
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t k = 0; k < logits.cols(); ++k) logits(i, k) += p.b_enc(0, k);
    CmForward out;
    out.gamma = row_softmax(logits);
    out.x_rec = matmul(out.gamma, p.w_dec);
    for (std::size_t i = 0; i < out.x_rec.rows(); ++i)
        for (std::size_t j = 0; j < out.x_rec.cols(); ++j) out.x_rec(i, j) += p.b_dec(0, j);
    return out;
}

Matrix extract_centroids(const CmParams& p) {
    Matrix mu = p.w_dec;
    for (std::size_t k = 0; k < mu.rows(); ++k)
        for (std::size_t j = 0; j < mu.cols(); ++j) mu(k, j) += p.b_dec(0, j);
    return mu;
}

std::vector<int> cm_predict(const Matrix& x, const CmParams& p) {
    const Matrix gamma = cm_forward(x, p).gamma;
    std::vector<int> labels(gamma.rows());
    for (std::size_t i = 0; i < gamma.rows(); ++i) {
        auto r = gamma.row(i);
        labels[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return labels;
}

std::vector<double> prior_weights(std::span<const double> alpha, std::span<const double> mean_gamma,
                                  PriorMode mode) {
    if (alpha.size() != mean_gamma.size())
        throw DimensionError("prior_weights: alpha has " + std::to_string(alpha.size()) + " entries for K=" +
                             std::to_string(mean_gamma.size()));
    const std::size_t k = alpha.size();
    std::vector<double> w(k);
    if (mode == PriorMode::symmetric) {
        for (std::size_t c = 0; c < k; ++c) w[c] = 1.0 - alpha[c];
        return w;
    }
    std::vector<double> a(alpha.begin(), alpha.end());
    std::sort(a.begin(), a.end(), std::greater<>());
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return mean_gamma[l] > mean_gamma[r]; });
    for (std::size_t rank = 0; rank < k; ++rank) w[order[rank]] = 1.0 - a[rank];
    return w;
}

CmLossBreakdown cm_loss(const Matrix& x, const Matrix& gamma, const Matrix& x_rec, const CmParams& p,
                        std::span<const double> alpha, PriorMode mode, const CmTermWeights& w) {
    const std::size_t n = x.rows(), k = p.k();
    if (gamma.rows() != n || gamma.cols() != k || x_rec.rows() != n || x_rec.cols() != x.cols())
        throw DimensionError("cm_loss: shapes of x, gamma and x_rec disagree");
    if (n == 0) throw DimensionError("cm_loss: empty batch");

    const Matrix mu = extract_centroids(p);
    const Matrix gram = matmul(mu, mu.transposed());
    CmLossBreakdown b;
    for (std::size_t i = 0; i < n; ++i) {
        b.e_rec += squared_distance(x.row(i), x_rec.row(i));
        auto g = gamma.row(i);
        for (std::size_t a = 0; a < k; ++a) {
            b.e_gini += g[a] * (1.0 - g[a]) * gram(a, a);
            for (std::size_t c = 0; c < k; ++c)
                if (c != a) b.e_cross += g[a] * g[c] * gram(a, c);
        }
    }
    const std::vector<double> mean_gamma = column_means(gamma);
    const std::vector<double> pw = prior_weights(alpha, mean_gamma, mode);
    for (std::size_t c = 0; c < k; ++c) b.e_prior += pw[c] * std::log(std::max(mean_gamma[c], kLogFloor));

    require_term_finite(b.e_rec, "e_rec");
    require_term_finite(b.e_gini, "e_gini");
    require_term_finite(b.e_cross, "e_cross");
    require_term_finite(b.e_prior, "e_prior");
    b.total = w.rec * b.e_rec + w.gini * b.e_gini - w.cross * b.e_cross + w.prior * b.e_prior;
    return b;
}

double q_expansion_identity_check(std::span<const double> x_row, std::span<const double> gamma_row,
                                  const Matrix& mu) {
    const std::size_t k = mu.rows(), d = mu.cols();
    if (gamma_row.size() != k || x_row.size() != d)
        throw DimensionError("q_expansion_identity_check: shape mismatch");
    double lhs = 0.0;
    for (std::size_t c = 0; c < k; ++c) lhs += gamma_row[c] * squared_distance(x_row, mu.row(c));

    std::vector<double> x_rec(d, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j) x_rec[j] += gamma_row[c] * mu(c, j);
    double gini = 0.0, cross = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t c = 0; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += mu(a, j) * mu(c, j);
            if (a == c)
                gini += gamma_row[a] * (1.0 - gamma_row[a]) * dot;
            else
                cross += gamma_row[a] * gamma_row[c] * dot;
        }
    }
    const double rhs = squared_distance(x_row, x_rec) + gini - cross;
    return std::abs(lhs - rhs);
}

CmParams cm_init_from_centroids(const Matrix& centroids) {
    if (centroids.rows() == 0 || centroids.cols() == 0) throw DimensionError("cm_init_from_centroids: empty");
    centroids.require_finite("centroids");
    const std::size_t k = centroids.rows(), d = centroids.cols();
    CmParams p;
    p.w_dec = centroids;
    p.b_enc = Matrix(1, k);
    p.b_dec = Matrix(1, d);
    if (k <= d) {
        p.w_enc = pseudo_inverse(centroids);
        return p;
    }
    // More clusters than dimensions: no right inverse exists. Use the
    // posterior of an equal-variance isotropic mixture, which maps every
    // centroid onto its own cluster.
    p.w_enc = centroids.transposed();
    for (std::size_t c = 0; c < k; ++c) {
        double sq = 0.0;
        for (double v : centroids.row(c)) sq += v * v;
        p.b_enc(0, c) = -0.5 * sq;
    }
    return p;
}

CmParams cm_random_init(std::size_t d, std::size_t k, Rng& rng, double std) {
    if (d == 0 || k == 0) throw DimensionError("cm_random_init: zero dimension");
    CmParams p;
    p.w_enc = sample_normal(rng, d, k, 0.0, std);
    p.b_enc = Matrix(1, k);
    p.w_dec = sample_normal(rng, k, d, 0.0, std);
    p.b_dec = Matrix(1, d);
    return p;
}

double l_sp(const Matrix& x, const CmParams& p, bool signed_cross) {
    const CmForward f = cm_forward(x, p);
    const std::vector<double> alpha(p.k(), 1.0);
    const CmLossBreakdown b = cm_loss(x, f.gamma, f.x_rec, p, alpha, PriorMode::symmetric);
    return signed_cross ? b.e_gini - b.e_cross : b.e_gini + b.e_cross;
}

CmVars cm_leaves(ad::Tape& tape, const CmParams& p) {
    return {tape.leaf(p.w_enc), tape.leaf(p.b_enc), tape.leaf(p.w_dec), tape.leaf(p.b_dec)};
}

CmGraph cm_graph(ad::Var x, const CmVars& v, std::span<const double> alpha, PriorMode mode,
                 bool sparsity_terms) {
    using namespace ad;
    Tape& t = *x.tape;
    const std::size_t k = v.w_dec.rows(), d = v.w_dec.cols();
    if (alpha.size() != k) throw DimensionError("cm_graph: alpha length differs from K");
    CmGraph g;
    g.gamma = row_softmax(add_row_broadcast(matmul(x, v.w_enc), v.b_enc));
    g.x_rec = add_row_broadcast(matmul(g.gamma, v.w_dec), v.b_dec);
    g.mu = add_row_broadcast(v.w_dec, v.b_dec);
    g.e_rec = sum(square(x - g.x_rec));

    if (sparsity_terms) {
        // Squared norms of the centroids as a K×1 column.
        Var norms = matmul(square(g.mu), t.constant(Matrix(d, 1, 1.0)));
        Var gamma_sq = square(g.gamma);
        g.e_gini = sum(matmul(g.gamma - gamma_sq, norms));
        Var gram = matmul(g.mu, transpose(g.mu));
        g.e_cross = sum(mul(matmul(g.gamma, gram), g.gamma)) - sum(matmul(gamma_sq, norms));
    }

    Var mean_gamma = column_mean(g.gamma);
    const Matrix& mg = mean_gamma.value();
    const std::vector<double> pw =
        prior_weights(alpha, std::span<const double>(mg.values().data(), mg.cols()), mode);
    g.e_prior = sum(mul(log(clamp_min(mean_gamma, kLogFloor)), t.constant(Matrix::row_vector(pw))));
    return g;
}

ad::Var cm_total(const CmGraph& g, const CmTermWeights& w) {
    using namespace ad;
    Var total = w.rec * g.e_rec;
    total = total + w.gini * g.e_gini;
    total = total - w.cross * g.e_cross;
    total = total + w.prior * g.e_prior;
    return total;
}

CmLossBreakdown cm_breakdown(const CmGraph& g, const CmTermWeights& w) {
    CmLossBreakdown b;
    b.e_rec = g.e_rec.scalar();
    b.e_gini = g.e_gini.scalar();
    b.e_cross = g.e_cross.scalar();
    b.e_prior = g.e_prior.scalar();
    b.total = w.rec * b.e_rec + w.gini * b.e_gini - w.cross * b.e_cross + w.prior * b.e_prior;
    return b;
}

void validate_cm_config(const CmTrainConfig& c, std::size_t n, std::size_t k) {
    if (k == 0) throw ConfigError("k must be positive");
    if (c.alpha.size() != k)
        throw ConfigError("alpha has " + std::to_string(c.alpha.size()) + " entries, expected " + std::to_string(k));
    for (double a : c.alpha)
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha entries must be positive and finite");
    if (c.batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (c.batch_size > n)
        throw ConfigError("batch_size " + std::to_string(c.batch_size) + " exceeds N=" + std::to_string(n));
    if (!(c.optimizer.lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(c.init_std >= 0.0)) throw ConfigError("init_std must be non-negative");
}

CmTrainResult train_cm(const Matrix& x, std::size_t k, const CmTrainConfig& config, const CmEpochHook& hook) {
    validate_cm_config(config, x.rows(), k);
    Rng rng(config.seed);
    CmParams init;
    if (config.init == InitScheme::kmeanspp)
        init = cm_init_from_centroids(kmeans_pp_init(x, k, rng));
    else
        init = cm_random_init(x.cols(), k, rng, config.init_std);
    return train_cm_from(x, std::move(init), config, rng, hook);
}

CmTrainResult train_cm_from(const Matrix& x, CmParams init, const CmTrainConfig& config, Rng& rng,
                            const CmEpochHook& hook) {
    init.validate();
    if (x.cols() != init.dim()) throw DimensionError("train_cm: data width differs from model");
    validate_cm_config(config, x.rows(), init.k());

    CmTrainResult res;
    res.params = std::move(init);
    CmParams& p = res.params;
    Optimizer opt(config.optimizer, {&p.w_enc, &p.b_enc, &p.w_dec, &p.b_dec});

    const std::size_t n = x.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    // One pass over shuffled mini-batches; returns the summed breakdown.
    auto run_epoch = [&](std::size_t epoch, bool averaging, Matrix* sum_wdec, Matrix* sum_bdec,
                         std::size_t* iterations) {
        rng.shuffle(std::span<std::size_t>(order));
        CmLossBreakdown total;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const Matrix xb = x.select_rows(std::span<const std::size_t>(order).subspan(start, stop - start));
            ad::Tape tape;
            const CmVars v = cm_leaves(tape, p);
            CmGraph g;
            try {
                g = cm_graph(tape.constant(xb), v, config.alpha, config.prior_mode);
            } catch (const NumericalError& e) {
                throw DivergenceError(epoch, std::string("forward (") + e.what() + ")");
            }
            const ad::Var loss = cm_total(g, config.terms);
            const CmLossBreakdown b = cm_breakdown(g, config.terms);
            check_finite_terms(b, epoch);
            total += b;
            tape.backward(loss);
            const Matrix* grads[4] = {averaging ? nullptr : &v.w_enc.grad(), averaging ? nullptr : &v.b_enc.grad(),
                                      &v.w_dec.grad(), &v.b_dec.grad()};
            opt.step(grads);
            if (!p.w_dec.all_finite() || !p.b_dec.all_finite() || !p.w_enc.all_finite() || !p.b_enc.all_finite())
                throw DivergenceError(epoch, "parameters");
            if (averaging) {
                *sum_wdec += p.w_dec;
                *sum_bdec += p.b_dec;
                ++*iterations;
                if (config.keep_snapshots) res.snapshots.push_back(extract_centroids(p));
            }
        }
        return total;
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        res.history.push_back({epoch, run_epoch(epoch, false, nullptr, nullptr, nullptr), false});
        if (hook) hook(epoch, p);
    }

    if (config.averaging_epoch) {
        Matrix sum_wdec(p.w_dec.rows(), p.w_dec.cols());
        Matrix sum_bdec(1, p.b_dec.cols());
        std::size_t iterations = 0;
        const std::size_t epoch = config.epochs;
        res.history.push_back({epoch, run_epoch(epoch, true, &sum_wdec, &sum_bdec, &iterations), true});
        const double inv = 1.0 / static_cast<double>(iterations);
        p.w_dec = sum_wdec * inv;
        p.b_dec = sum_bdec * inv;
        if (hook) hook(epoch, p);
    }
    return res;
}

std::optional<CmPreset> cm_preset(std::string_view dataset) {
    struct Entry {
        std::string_view name;
        CmPreset preset;
    };
    static constexpr Entry table[] = {
        {"mnist", {177.0, 111}}, {"fmnist", {80.0, 35}},    {"usps", {40.0, 150}},
        {"cifar10", {164.0, 350}}, {"r10k", {10.0, 400}},   {"20news", {11.0, 85}},
        {"10x73k", {1000.0, 500}}, {"pendigit", {13.0, 80}}, {"five-gaussians", {5.0, 20}},
    };
    for (const auto& e : table)
        if (e.name == dataset) return e.preset;
    return std::nullopt;
}

}  // namespace clmod
