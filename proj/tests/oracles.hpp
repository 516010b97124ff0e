#pragma once

// Slow reference implementations used only by tests. They follow the
// textbook definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "clmod/matrix.hpp"

namespace oracle {

// Adjusted Rand index by enumerating all point pairs.
inline double ari_pairs(std::span<const int> t, std::span<const int> p) {
    const std::size_t n = t.size();
    double both = 0, same_t = 0, same_p = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool st = t[i] == t[j], sp = p[i] == p[j];
            both += st && sp;
            same_t += st;
            same_p += sp;
            pairs += 1;
        }
    const double expected = same_t * same_p / pairs;
    const double max_index = 0.5 * (same_t + same_p);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

inline double entropy_of(std::span<const int> labels) {
    std::map<int, double> counts;
    for (int l : labels) counts[l] += 1;
    double h = 0;
    const double n = static_cast<double>(labels.size());
    for (auto& [l, c] : counts) h -= c / n * std::log(c / n);
    return h;
}

inline double joint_entropy(std::span<const int> a, std::span<const int> b) {
    std::map<std::pair<int, int>, double> counts;
    for (std::size_t i = 0; i < a.size(); ++i) counts[{a[i], b[i]}] += 1;
    double h = 0;
    const double n = static_cast<double>(a.size());
    for (auto& [k, c] : counts) h -= c / n * std::log(c / n);
    return h;
}

// I(U;V) = H(U) + H(V) - H(U,V), normalized by the geometric mean.
inline double nmi_entropies(std::span<const int> t, std::span<const int> p) {
    const double hu = entropy_of(t), hv = entropy_of(p);
    if (hu == 0 && hv == 0) return 1.0;
    if (hu == 0 || hv == 0) return 0.0;
    const double mi = hu + hv - joint_entropy(t, p);
    return mi / std::sqrt(hu * hv);
}

// 1 - H(T|P)/H(T) with H(T|P) = H(T,P) - H(P).
inline double homogeneity_entropies(std::span<const int> t, std::span<const int> p) {
    const double ht = entropy_of(t);
    if (ht == 0) return 1.0;
    return 1.0 - (joint_entropy(t, p) - entropy_of(p)) / ht;
}

// Best accuracy over every injective map from the smaller label set into the
// larger one.
inline double acc_exhaustive(std::span<const int> t, std::span<const int> p) {
    std::set<int> tset(t.begin(), t.end()), pset(p.begin(), p.end());
    std::vector<int> tv(tset.begin(), tset.end()), pv(pset.begin(), pset.end());
    const bool pred_small = pv.size() <= tv.size();
    const std::vector<int>& small = pred_small ? pv : tv;
    const std::vector<int>& large = pred_small ? tv : pv;

    std::map<std::pair<int, int>, long> counts;  // (pred, true)
    for (std::size_t i = 0; i < t.size(); ++i) ++counts[{p[i], t[i]}];

    long best = 0;
    std::vector<char> taken(large.size(), 0);
    std::function<void(std::size_t, long)> rec = [&](std::size_t idx, long acc) {
        if (idx == small.size()) {
            best = std::max(best, acc);
            return;
        }
        for (std::size_t j = 0; j < large.size(); ++j) {
            if (taken[j]) continue;
            taken[j] = 1;
            const int pl = pred_small ? small[idx] : large[j];
            const int tl2 = pred_small ? large[j] : small[idx];
            auto it = counts.find({pl, tl2});
            rec(idx + 1, acc + (it == counts.end() ? 0 : it->second));
            taken[j] = 0;
        }
    };
    rec(0, 0);
    return static_cast<double>(best) / static_cast<double>(t.size());
}

// Minimum assignment cost over all permutations of a square matrix.
inline double assignment_brute_force(const clmod::Matrix& c) {
    std::vector<std::size_t> perm(c.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += c(i, perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace oracle
