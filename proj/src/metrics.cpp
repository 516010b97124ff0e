#include "clmod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "clmod/error.hpp"

namespace clmod {

namespace {

void validate(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw DimensionError("metrics: label vectors of different lengths (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw DimensionError("metrics: empty label vectors");
}

std::vector<int> compact(std::span<const int> labels, std::size_t& k) {
    std::map<int, int> ids;
    for (int l : labels) ids.emplace(l, 0);
    int next = 0;
    for (auto& [label, id] : ids) id = next++;
    k = ids.size();
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
    return out;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

double entropy(const std::vector<long>& sizes, double n) {
    double h = 0.0;
    for (long s : sizes) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / n;
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const Contingency& c) {
    const double n = static_cast<double>(c.n);
    double mi = 0.0;
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        for (std::size_t j = 0; j < c.table[i].size(); ++j) {
            const long nij = c.table[i][j];
            if (nij == 0) continue;
            const double v = static_cast<double>(nij);
            mi += v / n *
                  std::log(v * n / (static_cast<double>(c.true_sizes[i]) *
                                    static_cast<double>(c.pred_sizes[j])));
        }
    }
    return std::max(mi, 0.0);
}

}  // namespace

Contingency Contingency::build(std::span<const int> labels_true, std::span<const int> labels_pred) {
    validate(labels_true, labels_pred);
    std::size_t kt = 0, kp = 0;
    auto t = compact(labels_true, kt);
    auto p = compact(labels_pred, kp);
    Contingency c;
    c.table.assign(kt, std::vector<long>(kp, 0));
    c.true_sizes.assign(kt, 0);
    c.pred_sizes.assign(kp, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        ++c.table[t[i]][p[i]];
        ++c.true_sizes[t[i]];
        ++c.pred_sizes[p[i]];
    }
    c.n = static_cast<long>(t.size());
    return c;
}

double ari(std::span<const int> labels_true, std::span<const int> labels_pred) {
    const Contingency c = Contingency::build(labels_true, labels_pred);
    double index = 0.0, a = 0.0, b = 0.0;
    for (const auto& row : c.table)
        for (long v : row) index += comb2(static_cast<double>(v));
    for (long s : c.true_sizes) a += comb2(static_cast<double>(s));
    for (long s : c.pred_sizes) b += comb2(static_cast<double>(s));
    const double total = comb2(static_cast<double>(c.n));
    const double expected = total > 0 ? a * b / total : 0.0;
    const double max_index = 0.5 * (a + b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

double nmi(std::span<const int> labels_true, std::span<const int> labels_pred) {
    const Contingency c = Contingency::build(labels_true, labels_pred);
    const double n = static_cast<double>(c.n);
    const double hu = entropy(c.true_sizes, n);
    const double hv = entropy(c.pred_sizes, n);
    if (hu == 0.0 && hv == 0.0) return 1.0;
    if (hu == 0.0 || hv == 0.0) return 0.0;
    return std::min(1.0, mutual_information(c) / std::sqrt(hu * hv));
}

double acc(std::span<const int> labels_true, std::span<const int> labels_pred) {
    const Contingency c = Contingency::build(labels_true, labels_pred);
    Matrix cost(c.table.size(), c.pred_sizes.size());
    for (std::size_t i = 0; i < c.table.size(); ++i)
        for (std::size_t j = 0; j < c.table[i].size(); ++j)
            cost(i, j) = -static_cast<double>(c.table[i][j]);
    const Assignment a = hungarian(cost);
    return -a.cost / static_cast<double>(c.n);
}

double homogeneity(std::span<const int> labels_true, std::span<const int> labels_pred) {
    const Contingency c = Contingency::build(labels_true, labels_pred);
    const double n = static_cast<double>(c.n);
    const double h_true = entropy(c.true_sizes, n);
    if (h_true == 0.0) return 1.0;
    // H(true | pred)
    double h_cond = 0.0;
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        for (std::size_t j = 0; j < c.table[i].size(); ++j) {
            const long nij = c.table[i][j];
            if (nij == 0) continue;
            const double v = static_cast<double>(nij);
            h_cond -= v / n * std::log(v / static_cast<double>(c.pred_sizes[j]));
        }
    }
    return std::clamp(1.0 - h_cond / h_true, 0.0, 1.0);
}

Assignment hungarian(const Matrix& cost) {
    const std::size_t rows = cost.rows(), cols = cost.cols();
    Assignment result;
    result.row_to_col.assign(rows, -1);
    if (rows == 0 || cols == 0) return result;
    cost.require_finite("hungarian cost");

    const std::size_t n = std::max(rows, cols);
    double pad = cost(0, 0);
    for (double v : cost.values()) pad = std::max(pad, v);
    Matrix a(n, n, pad);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) a(i, j) = cost(i, j);

    // Shortest augmenting path with row/column potentials; 1-based with a
    // virtual column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j] - 1;
        if (i < rows && j - 1 < cols) {
            result.row_to_col[i] = static_cast<int>(j - 1);
            result.cost += cost(i, j - 1);
        }
    }
    return result;
}

}  // namespace clmod
