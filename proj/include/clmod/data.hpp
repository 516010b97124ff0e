#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clmod/error.hpp"
#include "clmod/matrix.hpp"

namespace clmod {

struct Dataset {
    Matrix features;
    std::optional<std::vector<int>> labels;  // in [0, k_true)
    std::string name;
    std::optional<std::size_t> k_true;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
};

class FileNotFoundError : public DataError {
public:
    using DataError::DataError;
};

// Cell-level failure. Row and column are 1-based file positions.
class CsvParseError : public DataError {
public:
    CsvParseError(const std::string& msg, std::size_t row, std::size_t col)
        : DataError(msg), row_(row), col_(col) {}
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_, col_;
};

class RaggedRowError : public CsvParseError {
public:
    using CsvParseError::CsvParseError;
};

// Comma-separated numeric table. `label_column` (0-based) is split off as
// integer labels, remapped to 0..k-1 in increasing order of the raw value.
Dataset load_csv(const std::string& path, bool has_header = false,
                 std::optional<std::size_t> label_column = std::nullopt);

// 17 significant digits so that load_csv(save_csv(x)) is exact. Labels, when
// given, are written as a trailing integer column.
void save_csv(const std::string& path, const Matrix& x, const std::vector<int>* labels = nullptr);

// IDX image/label pair (magic 2051 / 2049). Pixels are scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Five isotropic unit-variance components in the plane with fixed means
// (see five_gaussian_means). Point i comes from component i mod 5.
Dataset gen_five_gaussians(std::size_t n, std::uint64_t seed);
Matrix five_gaussian_means();
constexpr double kFiveGaussianStd = 1.0;

enum class ToyKind { moons, circles, blobs, varied, aniso, no_structure };

ToyKind parse_toy_kind(const std::string& name);
std::string to_string(ToyKind kind);

// Negative noise selects the default for the kind: 0.05 for moons and
// circles; for the blob family the value scales the component spreads
// (default 1).
Dataset gen_toy(ToyKind kind, std::size_t n, double noise, std::uint64_t seed);
double default_toy_noise(ToyKind kind);

// Per-column map onto [0,1]; constant columns become 0.
Matrix minmax_normalize(const Matrix& x);

// Canonical datasets shipped under data/, located through CLMOD_DATA_DIR or
// the path baked in at build time. Names: iris, wine, pendigit.
Dataset load_named_dataset(const std::string& name);
std::string data_dir();

}  // namespace clmod
