#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "clmod/baselines.hpp"
#include "clmod/cm.hpp"
#include "clmod/data.hpp"
#include "clmod/error.hpp"
#include "clmod/metrics.hpp"
#include "doctest.h"

using namespace clmod;

namespace {

CmParams random_params(Rng& rng, std::size_t d, std::size_t k, double scale = 1.0) {
    CmParams p;
    p.w_enc = sample_normal(rng, d, k, 0.0, scale);
    p.b_enc = sample_normal(rng, 1, k, 0.0, scale);
    p.w_dec = sample_normal(rng, k, d, 0.0, scale);
    p.b_dec = sample_normal(rng, 1, d, 0.0, scale);
    return p;
}

Matrix random_stochastic_rows(Rng& rng, std::size_t n, std::size_t k) {
    Matrix g = sample_uniform(rng, n, k, 0.01, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (double v : g.row(i)) s += v;
        for (double& v : g.row(i)) v /= s;
    }
    return g;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

CmTrainConfig five_gaussian_protocol(std::uint64_t seed, std::size_t k = 5) {
    CmTrainConfig c;
    c.alpha.assign(k, 5.0);
    c.batch_size = 20;
    c.epochs = 50;
    c.optimizer.kind = OptimizerKind::sgd;
    c.optimizer.lr = 0.01;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("cm_forward") {
    SUBCASE("zero encoder gives uniform responsibilities") {
        Rng rng(1);
        CmParams p = random_params(rng, 3, 4);
        p.w_enc = Matrix(3, 4);
        p.b_enc = Matrix(1, 4);
        Matrix x = sample_normal(rng, 6, 3, 0, 1);
        CmForward f = cm_forward(x, p);
        const Matrix mu = extract_centroids(p);
        std::vector<double> centre = column_means(mu);
        for (std::size_t i = 0; i < 6; ++i) {
            for (double g : f.gamma.row(i)) CHECK(g == doctest::Approx(0.25).epsilon(1e-15));
            for (std::size_t j = 0; j < 3; ++j) CHECK(f.x_rec(i, j) == doctest::Approx(centre[j]).epsilon(1e-12));
        }
    }
    SUBCASE("one-hot responsibilities decode to a centroid") {
        Rng rng(2);
        CmParams p = random_params(rng, 2, 3);
        p.w_enc = Matrix(2, 3);
        p.b_enc = Matrix{{0.0, 1e4, 0.0}};
        CmForward f = cm_forward(Matrix{{0.3, -1.0}}, p);
        const Matrix mu = extract_centroids(p);
        CHECK(f.gamma(0, 1) == 1.0);
        CHECK(max_abs_diff(f.x_rec, mu.select_rows(std::vector<std::size_t>{1})) <= 1e-14);
    }
    SUBCASE("scalar-loop oracle") {
        Rng rng(3);
        CmParams p = random_params(rng, 3, 2);
        Matrix x = sample_normal(rng, 5, 3, 0, 1);
        CmForward f = cm_forward(x, p);
        for (std::size_t i = 0; i < 5; ++i) {
            double logits[2], mx = -1e300;
            for (std::size_t k = 0; k < 2; ++k) {
                logits[k] = p.b_enc(0, k);
                for (std::size_t j = 0; j < 3; ++j) logits[k] += x(i, j) * p.w_enc(j, k);
                mx = std::max(mx, logits[k]);
            }
            const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
            const double g[2] = {std::exp(logits[0] - mx) / z, std::exp(logits[1] - mx) / z};
            for (std::size_t j = 0; j < 3; ++j) {
                const double rec = g[0] * p.w_dec(0, j) + g[1] * p.w_dec(1, j) + p.b_dec(0, j);
                CHECK(std::abs(f.x_rec(i, j) - rec) <= 1e-12);
            }
        }
    }
    SUBCASE("dimension mismatch") {
        Rng rng(4);
        CHECK_THROWS_AS(cm_forward(Matrix(2, 4), random_params(rng, 3, 2)), DimensionError);
    }
}

TEST_CASE("cm_loss terms") {
    Rng rng(10);
    SUBCASE("one-hot assignment on the centroids zeroes the sparsity and reconstruction terms") {
        CmParams p = random_params(rng, 3, 3);
        const Matrix mu = extract_centroids(p);
        Matrix x = mu.select_rows(std::vector<std::size_t>{0, 2, 1, 1});
        Matrix gamma{{1, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 0}};
        std::vector<double> alpha(3, 2.0);
        CmLossBreakdown b = cm_loss(x, gamma, x, p, alpha, PriorMode::symmetric);
        CHECK(b.e_rec == 0.0);
        CHECK(b.e_gini == 0.0);
        CHECK(b.e_cross == 0.0);
        CHECK(b.total == doctest::Approx(b.e_prior));
    }
    SUBCASE("two clusters: gini minus cross is the merge term") {
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t d = 1 + rng.uniform_index(6);
            CmParams p = random_params(rng, d, 2, 2.0);
            const Matrix mu = extract_centroids(p);
            const double g = rng.uniform();
            Matrix gamma{{g, 1.0 - g}};
            Matrix x = sample_normal(rng, 1, d, 0, 1);
            std::vector<double> alpha(2, 1.5);
            CmLossBreakdown b = cm_loss(x, gamma, x, p, alpha, PriorMode::symmetric);
            const double expected = g * (1 - g) * squared_distance(mu.row(0), mu.row(1));
            CHECK(std::abs((b.e_gini - b.e_cross) - expected) <= 1e-10 * std::max(1.0, expected));
        }
    }
    SUBCASE("uniform-plus-one concentration gives the KL divergence from uniform") {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t k = 2 + rng.uniform_index(7);
            CmParams p = random_params(rng, 2, k);
            Matrix gamma = random_stochastic_rows(rng, 7, k);
            Matrix x = sample_normal(rng, 7, 2, 0, 1);
            std::vector<double> alpha(k, 1.0 + 1.0 / static_cast<double>(k));
            CmLossBreakdown b = cm_loss(x, gamma, x, p, alpha, PriorMode::symmetric);
            std::vector<double> mean = column_means(gamma);
            double kl = 0;
            const double u = 1.0 / static_cast<double>(k);
            for (double m : mean) kl += u * std::log(u / m);
            CHECK(std::abs(b.e_prior - std::log(static_cast<double>(k)) - kl) <= 1e-10);
        }
    }
    SUBCASE("total is the signed sum") {
        CmParams p = random_params(rng, 3, 4);
        Matrix x = sample_normal(rng, 9, 3, 0, 1);
        CmForward f = cm_forward(x, p);
        std::vector<double> alpha{2, 3, 4, 5};
        CmLossBreakdown b = cm_loss(x, f.gamma, f.x_rec, p, alpha, PriorMode::symmetric);
        CHECK(b.e_rec >= 0);
        CHECK(b.e_gini >= 0);
        CHECK(std::abs(b.total - (b.e_rec + b.e_gini - b.e_cross + b.e_prior)) <= 1e-12);
    }
    SUBCASE("sorted prior pairs the largest concentration with the largest mean responsibility") {
        std::vector<double> alpha{1.0, 5.0, 3.0};
        std::vector<double> mean{0.5, 0.2, 0.3};
        std::vector<double> w = prior_weights(alpha, mean, PriorMode::sorted);
        CHECK(w == std::vector<double>{-4.0, 0.0, -2.0});
        CHECK(prior_weights(alpha, mean, PriorMode::symmetric) == std::vector<double>{0.0, -4.0, -2.0});
    }
    SUBCASE("vanishing cluster mass is clamped") {
        CmParams p = random_params(rng, 2, 2);
        Matrix gamma{{1, 0}, {1, 0}};
        Matrix x(2, 2);
        std::vector<double> alpha(2, 2.0);
        CmLossBreakdown b = cm_loss(x, gamma, x, p, alpha, PriorMode::symmetric);
        CHECK(std::isfinite(b.e_prior));
        CHECK(b.e_prior == doctest::Approx(-std::log(1e-12)));
    }
    SUBCASE("non-finite input names the offending term") {
        CmParams p = random_params(rng, 2, 2);
        Matrix x{{std::nan(""), 0.0}};
        Matrix gamma{{0.5, 0.5}};
        std::vector<double> alpha(2, 2.0);
        try {
            cm_loss(x, gamma, Matrix(1, 2), p, alpha, PriorMode::symmetric);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(std::string(e.what()).find("e_rec") != std::string::npos);
        }
    }
}

TEST_CASE("tape loss matches direct evaluation and finite differences") {
    Rng rng(20);
    for (PriorMode mode : {PriorMode::symmetric, PriorMode::sorted}) {
        CmParams p = random_params(rng, 4, 3, 0.7);
        Matrix x = sample_normal(rng, 8, 4, 0, 1);
        std::vector<double> alpha{1.5, 4.0, 2.5};

        ad::Tape tape;
        CmGraph g = cm_graph(tape.constant(x), cm_leaves(tape, p), alpha, mode);
        CmLossBreakdown taped = cm_breakdown(g, {});
        CmForward f = cm_forward(x, p);
        CmLossBreakdown direct = cm_loss(x, f.gamma, f.x_rec, p, alpha, mode);
        CHECK(std::abs(taped.e_rec - direct.e_rec) <= 1e-12 * std::max(1.0, direct.e_rec));
        CHECK(std::abs(taped.e_gini - direct.e_gini) <= 1e-12 * std::max(1.0, direct.e_gini));
        CHECK(std::abs(taped.e_cross - direct.e_cross) <= 1e-12 * std::max(1.0, std::abs(direct.e_cross)));
        CHECK(std::abs(taped.e_prior - direct.e_prior) <= 1e-12 * std::max(1.0, std::abs(direct.e_prior)));

        ad::GraphFn fn = [&](ad::Tape& t, std::span<const ad::Var> v) {
            CmVars vars{v[0], v[1], v[2], v[3]};
            return cm_total(cm_graph(t.constant(x), vars, alpha, mode), {});
        };
        ad::GradCheckReport rep = ad::finite_diff_check(fn, {p.w_enc, p.b_enc, p.w_dec, p.b_dec}, 1e-6, 1e-5);
        CHECK(rep.passed);
        CHECK(rep.worst <= 1e-5);
    }
}

TEST_CASE("q-expansion identity") {
    Rng rng(30);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 1 + rng.uniform_index(10), k = 1 + rng.uniform_index(8);
        Matrix mu = sample_normal(rng, k, d, 0, 2);
        Matrix x = sample_normal(rng, 1, d, 0, 2);
        Matrix g = random_stochastic_rows(rng, 1, k);
        worst = std::max(worst, q_expansion_identity_check(x.row(0), g.row(0), mu));
    }
    CHECK(worst <= 1e-9);

    Matrix mu{{1, 2}, {-3, 0.5}, {0, 4}};
    std::vector<double> x{0.3, -0.7};
    std::vector<double> one_hot{0, 1, 0};
    CHECK(q_expansion_identity_check(x, one_hot, mu) <= 1e-15);
    Matrix single{{2, -1}};
    std::vector<double> g1{1.0};
    CHECK(q_expansion_identity_check(x, g1, single) == 0.0);
}

TEST_CASE("initialization from centroids") {
    SUBCASE("orthonormal centroids are recovered by the encoder") {
        Matrix c{{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}};
        CmParams p = cm_init_from_centroids(c);
        CHECK(extract_centroids(p) == c);
        CHECK(p.b_enc == Matrix(1, 3));
        CHECK(max_abs_diff(matmul(c, p.w_enc), Matrix::identity(3)) <= 1e-12);
        CHECK(argmax_rows(cm_forward(c, p).gamma) == std::vector<int>{0, 1, 2});
    }
    SUBCASE("k-means++ centroids on five Gaussians") {
        Dataset ds = gen_five_gaussians(2000, 1);
        Matrix x = standardize(ds.features).data;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            Matrix c = kmeans_pp_init(x, 5, rng);
            CmParams p = cm_init_from_centroids(c);
            CHECK(max_abs_diff(extract_centroids(p), c) == 0.0);
            CHECK(argmax_rows(cm_forward(c, p).gamma) == std::vector<int>{0, 1, 2, 3, 4});
            // Data points go to their nearest centroid.
            CHECK(cm_predict(x, p) == nearest_centroid(x, c));
        }
    }
    SUBCASE("single centroid") {
        CmParams p = cm_init_from_centroids(Matrix{{1.5, -2.0}});
        Rng rng(5);
        Matrix x = sample_normal(rng, 4, 2, 0, 3);
        CmForward f = cm_forward(x, p);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(f.gamma(i, 0) == 1.0);
            CHECK(f.x_rec(i, 0) == 1.5);
            CHECK(f.x_rec(i, 1) == -2.0);
        }
    }
    SUBCASE("rank-deficient centroids are rejected") {
        CHECK_THROWS_AS(cm_init_from_centroids(Matrix{{1, 2, 3}, {2, 4, 6}}), SingularMatrixError);
    }
}

TEST_CASE("extract_centroids") {
    Rng rng(40);
    CmParams p = random_params(rng, 3, 4);
    Matrix mu = extract_centroids(p);
    for (std::size_t k = 0; k < 4; ++k) {
        CmParams q = p;
        q.w_enc = Matrix(3, 4);
        q.b_enc = Matrix(1, 4);
        q.b_enc(0, k) = 1e4;
        CmForward f = cm_forward(Matrix(1, 3), q);
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(f.x_rec(0, j) - mu(k, j)) <= 1e-14);
    }
    p.b_dec = Matrix(1, 3);
    CHECK(extract_centroids(p) == p.w_dec);
}

TEST_CASE("l_sp") {
    SUBCASE("one-hot responsibilities") {
        CmParams p;
        p.w_enc = Matrix(2, 3);
        p.b_enc = Matrix{{1e4, 0, 0}};
        p.w_dec = Matrix{{1, 0}, {0, 1}, {1, 1}};
        p.b_dec = Matrix(1, 2);
        CHECK(l_sp(Matrix(5, 2, 0.3), p) == 0.0);
    }
    SUBCASE("uniform responsibilities with orthonormal centroids") {
        CmParams p;
        p.w_enc = Matrix(3, 3);
        p.b_enc = Matrix(1, 3);
        p.w_dec = Matrix::identity(3);
        p.b_dec = Matrix(1, 3);
        CHECK(l_sp(Matrix(10, 3, 0.1), p) == doctest::Approx(10.0 * (1.0 - 1.0 / 3.0)).epsilon(1e-12));
        CHECK(l_sp(Matrix(10, 3, 0.1), p, true) == doctest::Approx(10.0 * (1.0 - 1.0 / 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("train_cm") {
    Dataset ds = gen_five_gaussians(2000, 1);
    Standardized st = standardize(ds.features);

    SUBCASE("averaging pass leaves the encoder untouched") {
        CmTrainConfig c = five_gaussian_protocol(3);
        c.epochs = 3;
        CmParams before_avg;
        auto hook = [&](std::size_t epoch, const CmParams& p) {
            if (epoch == 2) before_avg = p;
        };
        CmTrainResult r = train_cm(st.data, 5, c, hook);
        CHECK(r.params.w_enc == before_avg.w_enc);
        CHECK(r.params.b_enc == before_avg.b_enc);
        CHECK(!(r.params.w_dec == before_avg.w_dec));
        CHECK(r.history.size() == 4);
        CHECK(r.history.back().averaging);
    }
    SUBCASE("deterministic under a fixed seed") {
        CmTrainConfig c = five_gaussian_protocol(9);
        c.epochs = 2;
        CmTrainResult a = train_cm(st.data, 5, c);
        CmTrainResult b = train_cm(st.data, 5, c);
        CHECK(a.params.w_dec == b.params.w_dec);
        CHECK(a.params.w_enc == b.params.w_enc);
    }
    SUBCASE("single cluster reconstructs the mean") {
        CmTrainConfig c = five_gaussian_protocol(4, 1);
        c.epochs = 10;
        CmTrainResult r = train_cm(st.data, 1, c);
        Matrix mu = extract_centroids(r.params);
        CHECK(std::abs(mu(0, 0)) < 0.1);
        CHECK(std::abs(mu(0, 1)) < 0.1);
        CmForward f = cm_forward(st.data, r.params);
        const double e_rec = sum(hadamard(st.data - f.x_rec, st.data - f.x_rec));
        // Standardized data: total variance is N·d.
        CHECK(e_rec == doctest::Approx(2000.0 * 2.0).epsilon(0.01));
    }
    SUBCASE("divergence is reported with the epoch and term") {
        CmTrainConfig c = five_gaussian_protocol(1);
        c.optimizer.lr = 10.0;
        c.epochs = 5;
        CHECK_THROWS_AS(train_cm(st.data, 5, c), DivergenceError);
    }
    SUBCASE("invalid configurations") {
        CmTrainConfig c = five_gaussian_protocol(1);
        c.alpha[2] = 0.0;
        CHECK_THROWS_AS(train_cm(st.data, 5, c), ConfigError);
        c = five_gaussian_protocol(1);
        c.batch_size = 5000;
        CHECK_THROWS_AS(train_cm(st.data, 5, c), ConfigError);
        c = five_gaussian_protocol(1);
        CHECK_THROWS_AS(train_cm(st.data, 4, c), ConfigError);
    }
    SUBCASE("averaged centroids land on the component means") {
        Matrix truth = five_gaussian_means();
        for (std::size_t r = 0; r < truth.rows(); ++r)
            for (std::size_t j = 0; j < 2; ++j) truth(r, j) = (truth(r, j) - st.means[j]) / st.stds[j];
        int close = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            CmTrainResult res = train_cm(st.data, 5, five_gaussian_protocol(seed));
            Matrix mu = extract_centroids(res.params);
            Matrix dist(5, 5);
            for (std::size_t a = 0; a < 5; ++a)
                for (std::size_t b = 0; b < 5; ++b) dist(a, b) = std::sqrt(squared_distance(mu.row(a), truth.row(b)));
            Assignment match = hungarian(dist);
            double worst = 0;
            for (std::size_t a = 0; a < 5; ++a) worst = std::max(worst, dist(a, match.row_to_col[a]));
            close += worst <= 0.15;
        }
        CHECK(close >= 8);
    }
}

TEST_CASE("presets") {
    CHECK(cm_preset("pendigit")->alpha == 13.0);
    CHECK(cm_preset("pendigit")->batch_size == 80);
    CHECK(cm_preset("mnist")->alpha == 177.0);
    CHECK(!cm_preset("unknown").has_value());
}
