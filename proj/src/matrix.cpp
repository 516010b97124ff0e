#include "clmod/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "clmod/error.hpp"

namespace clmod {

namespace {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                             shape_str(b));
    }
}

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: buffer of " + std::to_string(data_.size()) +
                             " values for shape " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::col_vector(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::require_finite(std::string_view what) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            std::ostringstream os;
            os << what << ": non-finite value " << data_[i] << " at (" << i / cols_ << ", "
               << i % cols_ << ")";
            throw NumericalError(os.str());
        }
    }
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw DimensionError("select_rows: index out of range");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + shape_str(a) + " times " + shape_str(b));
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        auto orow = out.row(i);
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < p; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    auto o = out.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return out;
}

Matrix row_softmax(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto o = out.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            total += o[c];
        }
        for (double& v : o) v /= total;
    }
    return out;
}

Matrix invert(const Matrix& a, double pivot_floor) {
    if (a.rows() != a.cols()) throw DimensionError("invert: non-square " + shape_str(a));
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
        if (std::abs(work(pivot, col)) < pivot_floor) {
            throw SingularMatrixError("invert: pivot " + std::to_string(work(pivot, col)) +
                                      " below floor at column " + std::to_string(col));
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work(pivot, c), work(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const double d = work(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            work(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                work(r, c) -= f * work(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

Matrix pseudo_inverse(const Matrix& w) {
    if (w.empty()) throw DimensionError("pseudo_inverse: empty matrix");
    w.require_finite("pseudo_inverse input");
    const bool wide = w.rows() <= w.cols();
    const Matrix wt = w.transposed();
    const Matrix gram = wide ? matmul(w, wt) : matmul(wt, w);
    const std::size_t k = gram.rows();

    auto solve = [&](const Matrix& g) {
        Matrix gi = invert(g);
        return wide ? matmul(wt, gi) : matmul(gi, wt);
    };

    Matrix p;
    try {
        p = solve(gram);
    } catch (const SingularMatrixError&) {
        p = solve(gram + 1e-10 * Matrix::identity(k));
    }
    // The ridge keeps the elimination alive but cannot restore lost rank.
    const Matrix check = wide ? matmul(w, p) : matmul(p, w);
    if (max_abs_diff(check, Matrix::identity(k)) > 1e-6 || !p.all_finite()) {
        throw SingularMatrixError("pseudo_inverse: input of shape " + shape_str(w) +
                                  " is rank deficient");
    }
    return p;
}

Standardized standardize(const Matrix& x) {
    Standardized out{x, std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
    const std::size_t n = x.rows();
    if (n == 0) return out;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        const double scale = sd < 1e-12 ? 1.0 : sd;
        for (std::size_t r = 0; r < n; ++r) out.data(r, c) = (x(r, c) - mean) / scale;
        out.means[c] = mean;
        out.stds[c] = sd;
    }
    return out;
}

double sum(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return s;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
    return m;
}

std::vector<double> column_means(const Matrix& a) {
    std::vector<double> m(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) m[c] += a(r, c);
    if (a.rows() > 0)
        for (double& v : m) v /= static_cast<double>(a.rows());
    return m;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw DomainError("uniform_index: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

Matrix sample_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std) {
    if (std < 0.0) throw DomainError("sample_normal: negative std");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal(mean, std);
    return m;
}

Matrix sample_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    if (lo > hi) throw DomainError("sample_uniform: lo > hi");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace clmod
