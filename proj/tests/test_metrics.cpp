#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "clmod/error.hpp"
#include "clmod/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace clmod;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
    std::vector<int> out(n);
    for (auto& v : out) v = static_cast<int>(rng.uniform_index(k));
    return out;
}

std::vector<int> relabel(Rng& rng, const std::vector<int>& labels) {
    int mx = 0;
    for (int v : labels) mx = std::max(mx, v);
    std::vector<int> perm(mx + 1);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = perm[labels[i]] * 3 + 7;
    return out;
}

}  // namespace

TEST_CASE("ari") {
    std::vector<int> t{0, 0, 1, 1, 2, 2};
    CHECK(ari(t, t) == 1.0);
    CHECK(ari(t, std::vector<int>{5, 5, 9, 9, 1, 1}) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<int> p{0, 0, 1, 2, 2, 2};
    CHECK(std::abs(ari(t, p) - oracle::ari_pairs(t, p)) <= 1e-12);

    std::vector<int> one{0, 0, 0};
    CHECK(ari(one, one) == 1.0);

    CHECK_THROWS_AS(ari(t, std::vector<int>{0, 1}), DimensionError);
    CHECK_THROWS_AS(ari(std::vector<int>{}, std::vector<int>{}), DimensionError);
}

TEST_CASE("nmi") {
    std::vector<int> t{0, 0, 1, 1, 2, 2};
    CHECK(nmi(t, t) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(nmi(t, std::vector<int>(6, 3)) == 0.0);
    CHECK(std::abs(nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1})) <= 1e-15);
    CHECK(nmi(std::vector<int>{4, 4}, std::vector<int>{1, 1}) == 1.0);
}

TEST_CASE("hungarian") {
    Matrix diag{{0, 5, 7}, {4, 0, 9}, {8, 6, 0}};
    Assignment a = hungarian(diag);
    CHECK(a.row_to_col == std::vector<int>{0, 1, 2});
    CHECK(a.cost == 0.0);

    Matrix flat(3, 5, 2.5);
    Assignment f = hungarian(flat);
    CHECK(f.cost == doctest::Approx(7.5));
    std::vector<int> seen;
    for (int c : f.row_to_col) {
        CHECK(c >= 0);
        seen.push_back(c);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(std::unique(seen.begin(), seen.end()) == seen.end());

    SUBCASE("tall matrix leaves rows unassigned") {
        Matrix tall{{1, 9}, {9, 1}, {0, 0}};
        Assignment t = hungarian(tall);
        CHECK(t.cost == doctest::Approx(1.0));
        CHECK(std::count(t.row_to_col.begin(), t.row_to_col.end(), -1) == 1);
    }

    SUBCASE("matches brute force") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            Matrix c = sample_uniform(rng, 5, 5, -3, 10);
            CHECK(std::abs(hungarian(c).cost - oracle::assignment_brute_force(c)) <= 1e-9);
        }
    }

    SUBCASE("row and column shifts leave the assignment unchanged") {
        Rng rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            Matrix c = sample_uniform(rng, 4, 4, 0, 10);
            Assignment base = hungarian(c);
            Matrix shifted = c;
            const std::size_t r = rng.uniform_index(4);
            const double delta = rng.uniform(-5, 5);
            for (std::size_t j = 0; j < 4; ++j) shifted(r, j) += delta;
            const std::size_t col = rng.uniform_index(4);
            const double delta2 = rng.uniform(-5, 5);
            for (std::size_t i = 0; i < 4; ++i) shifted(i, col) += delta2;
            Assignment moved = hungarian(shifted);
            CHECK(std::abs(moved.cost - (base.cost + delta + delta2)) <= 1e-9);
            CHECK(moved.row_to_col == base.row_to_col);
        }
    }
}

TEST_CASE("acc") {
    std::vector<int> t{0, 0, 1, 1, 1, 0};
    CHECK(acc(t, t) == 1.0);

    std::vector<int> split{0, 0, 1, 1, 2, 0};
    CHECK(std::abs(acc(t, split) - oracle::acc_exhaustive(t, split)) <= 1e-12);
    CHECK(acc(t, split) == doctest::Approx(5.0 / 6.0));

    std::vector<int> t3{0, 0, 0, 1, 1, 2};
    CHECK(acc(t3, std::vector<int>(6, 0)) == doctest::Approx(0.5));

    SUBCASE("agrees with exhaustive mapping for K <= 6") {
        Rng rng(123);
        for (int trial = 0; trial < 60; ++trial) {
            const std::size_t kt = 1 + rng.uniform_index(6), kp = 1 + rng.uniform_index(6);
            auto tl = random_labels(rng, 40, kt);
            auto pl = random_labels(rng, 40, kp);
            CHECK(std::abs(acc(tl, pl) - oracle::acc_exhaustive(tl, pl)) <= 1e-12);
        }
    }
}

TEST_CASE("homogeneity") {
    std::vector<int> t{0, 0, 1, 1};
    CHECK(homogeneity(t, std::vector<int>{0, 1, 2, 3}) == 1.0);
    CHECK(homogeneity(t, std::vector<int>(4, 0)) == 0.0);

    Rng rng(8);
    auto tl = random_labels(rng, 60, 4);
    auto pl = random_labels(rng, 60, 4);
    CHECK(std::abs(homogeneity(tl, pl) - oracle::homogeneity_entropies(tl, pl)) <= 1e-12);

    SUBCASE("refining a partition never lowers homogeneity") {
        for (int trial = 0; trial < 30; ++trial) {
            auto truth = random_labels(rng, 50, 4);
            auto coarse = random_labels(rng, 50, 3);
            std::vector<int> fine(coarse.size());
            for (std::size_t i = 0; i < coarse.size(); ++i)
                fine[i] = coarse[i] * 2 + static_cast<int>(rng.uniform_index(2));
            CHECK(homogeneity(truth, fine) >= homogeneity(truth, coarse) - 1e-12);
        }
    }
}

TEST_CASE("metrics against direct-formula oracles and relabeling") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        auto tl = random_labels(rng, 30, 2 + rng.uniform_index(4));
        auto pl = random_labels(rng, 30, 2 + rng.uniform_index(4));
        CHECK(std::abs(ari(tl, pl) - oracle::ari_pairs(tl, pl)) <= 1e-12);
        CHECK(std::abs(nmi(tl, pl) - oracle::nmi_entropies(tl, pl)) <= 1e-12);
        CHECK(std::abs(ari(tl, pl) - ari(pl, tl)) <= 1e-12);
        CHECK(std::abs(nmi(tl, pl) - nmi(pl, tl)) <= 1e-12);

        auto tr = relabel(rng, tl);
        auto pr = relabel(rng, pl);
        CHECK(std::abs(ari(tr, pr) - ari(tl, pl)) <= 1e-12);
        CHECK(std::abs(nmi(tr, pr) - nmi(tl, pl)) <= 1e-12);
        CHECK(std::abs(acc(tr, pr) - acc(tl, pl)) <= 1e-12);
        CHECK(std::abs(homogeneity(tr, pr) - homogeneity(tl, pl)) <= 1e-12);
    }
}
