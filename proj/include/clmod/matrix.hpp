#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace clmod {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::span<const double> values);
    static Matrix col_vector(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool all_finite() const;
    // Throws NumericalError naming `what` if any entry is NaN or infinite.
    void require_finite(std::string_view what) const;

    Matrix transposed() const;
    Matrix select_rows(std::span<const std::size_t> indices) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);

// Row-wise softmax with max subtraction.
Matrix row_softmax(const Matrix& x);

// Moore-Penrose inverse through the normal equations. A K×d input with K <= d
// gets the right inverse w^T (w w^T)^-1; a tall input gets the left inverse
// (w^T w)^-1 w^T. The small Gram matrix is inverted by Gaussian elimination
// with partial pivoting; a pivot below 1e-12 triggers one retry with a
// 1e-10 ridge before SingularMatrixError is raised.
Matrix pseudo_inverse(const Matrix& w);

// Inverse of a square matrix by Gauss-Jordan with partial pivoting.
// Throws SingularMatrixError when a pivot is below `pivot_floor`.
Matrix invert(const Matrix& a, double pivot_floor = 1e-12);

struct Standardized {
    Matrix data;
    std::vector<double> means;
    std::vector<double> stds;
};

// Column-wise zero mean, unit population variance. Columns whose std is
// below 1e-12 are only centered.
Standardized standardize(const Matrix& x);

double sum(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
std::vector<double> column_means(const Matrix& a);
double squared_distance(std::span<const double> a, std::span<const double> b);

// xoshiro256** seeded through splitmix64. Normals use the Box-Muller
// transform, caching the second variate.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double std) { return mean + std * normal(); }
    // Uniform integer in [0, n), rejection sampled.
    std::size_t uniform_index(std::size_t n);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

Matrix sample_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std);
Matrix sample_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi);

}  // namespace clmod
