#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clmod/matrix.hpp"

namespace clmod {

// Count table between two labelings. Labels are compacted to 0..K-1 in
// increasing order of their original value.
struct Contingency {
    std::vector<std::vector<long>> table;  // [true][pred]
    std::vector<long> true_sizes;
    std::vector<long> pred_sizes;
    long n = 0;

    static Contingency build(std::span<const int> labels_true, std::span<const int> labels_pred);
};

double ari(std::span<const int> labels_true, std::span<const int> labels_pred);
// Mutual information normalized by sqrt(H(true) * H(pred)), natural logs.
double nmi(std::span<const int> labels_true, std::span<const int> labels_pred);
// Fraction of points matched under the best one-to-one cluster/class mapping.
double acc(std::span<const int> labels_true, std::span<const int> labels_pred);
double homogeneity(std::span<const int> labels_true, std::span<const int> labels_pred);

struct Assignment {
    // row_to_col[r] is the column matched to row r, or -1 when r is left out
    // (only possible when rows > cols).
    std::vector<int> row_to_col;
    double cost = 0.0;
};

// Minimum-cost matching of min(rows, cols) pairs. Rectangular inputs are
// padded to square with the max entry.
Assignment hungarian(const Matrix& cost);

}  // namespace clmod
