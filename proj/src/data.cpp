#include "clmod/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace clmod {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

std::vector<int> compact_labels(const std::vector<long>& raw, std::size_t& k) {
    std::map<long, int> ids;
    for (long v : raw) ids.emplace(v, 0);
    int next = 0;
    for (auto& [v, id] : ids) id = next++;
    k = ids.size();
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = ids[raw[i]];
    return out;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError(path + ": truncated IDX header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path + ": cannot open file");
    return in;
}

Dataset blob_family(const Matrix& centers, const std::vector<double>& stds, std::size_t n, Rng& rng) {
    Dataset ds;
    ds.features = Matrix(n, 2);
    std::vector<int> labels(n);
    const std::size_t k = centers.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % k;
        labels[i] = static_cast<int>(c);
        ds.features(i, 0) = rng.normal(centers(c, 0), stds[c]);
        ds.features(i, 1) = rng.normal(centers(c, 1), stds[c]);
    }
    ds.labels = std::move(labels);
    ds.k_true = k;
    return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header, std::optional<std::size_t> label_column) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path + ": cannot open file");

    std::vector<double> values;
    std::vector<long> raw_labels;
    std::size_t width = 0, rows = 0, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && has_header) continue;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (rows == 0) {
            width = cells.size();
            if (label_column && *label_column >= width)
                throw ConfigError(path + ": label column " + std::to_string(*label_column) + " out of range (" +
                                  std::to_string(width) + " columns)");
        } else if (cells.size() != width) {
            throw RaggedRowError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                     " columns, found " + std::to_string(cells.size()),
                                 line_no, cells.size());
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string_view cell = cells[c];
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc() || ptr != last) {
                throw CsvParseError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                                        ": cannot parse '" + std::string(cell) + "' as a number",
                                    line_no, c + 1);
            }
            if (label_column && c == *label_column) {
                if (v != std::floor(v) || !std::isfinite(v))
                    throw CsvParseError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                                            ": label '" + std::string(cell) + "' is not an integer",
                                        line_no, c + 1);
                raw_labels.push_back(static_cast<long>(v));
            } else {
                values.push_back(v);
            }
        }
        ++rows;
    }
    if (rows == 0) throw DataError(path + ": no data rows");

    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    const std::size_t d = label_column ? width - 1 : width;
    ds.features = Matrix(rows, d, std::move(values));
    if (label_column) {
        std::size_t k = 0;
        ds.labels = compact_labels(raw_labels, k);
        ds.k_true = k;
    }
    return ds;
}

void save_csv(const std::string& path, const Matrix& x, const std::vector<int>* labels) {
    if (labels && labels->size() != x.rows()) throw DimensionError("save_csv: label count differs from rows");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    char buf[32];
    std::string line;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        line.clear();
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j) line += ',';
            std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
            line += buf;
        }
        if (labels) {
            if (x.cols()) line += ',';
            line += std::to_string((*labels)[i]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw DataError(path + ": write failed");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img = open_binary(images_path);
    if (read_be32(img, images_path) != 2051) throw DataError(images_path + ": bad IDX image magic");
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t h = read_be32(img, images_path);
    const std::uint32_t w = read_be32(img, images_path);
    const std::size_t d = std::size_t{h} * w;
    std::vector<unsigned char> pixels(std::size_t{count} * d);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
        throw DataError(images_path + ": payload shorter than header dimensions");
    img.peek();
    if (!img.eof()) throw DataError(images_path + ": payload longer than header dimensions");

    std::ifstream lab = open_binary(labels_path);
    if (read_be32(lab, labels_path) != 2049) throw DataError(labels_path + ": bad IDX label magic");
    const std::uint32_t nlab = read_be32(lab, labels_path);
    if (nlab != count) throw DataError(labels_path + ": label count differs from image count");
    std::vector<unsigned char> raw(nlab);
    if (!lab.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw DataError(labels_path + ": payload shorter than header dimensions");

    Dataset ds;
    ds.name = std::filesystem::path(images_path).stem().string();
    std::vector<double> values(pixels.size());
    std::transform(pixels.begin(), pixels.end(), values.begin(), [](unsigned char p) { return p / 255.0; });
    ds.features = Matrix(count, d, std::move(values));
    std::vector<int> labels(raw.begin(), raw.end());
    int mx = 0;
    for (int l : labels) mx = std::max(mx, l);
    ds.labels = std::move(labels);
    ds.k_true = static_cast<std::size_t>(mx) + 1;
    return ds;
}

Matrix five_gaussian_means() {
    // Pairwise distances range from 6.3 to 11.5 in units of the component std.
    return Matrix{{0.0, 0.0}, {6.5, 1.0}, {2.0, 7.0}, {-5.0, 4.0}, {-3.0, -5.5}};
}

Dataset gen_five_gaussians(std::size_t n, std::uint64_t seed) {
    if (n < 5) throw DomainError("gen_five_gaussians: n must be at least 5");
    Rng rng(seed);
    const Matrix means = five_gaussian_means();
    Dataset ds = blob_family(means, std::vector<double>(5, kFiveGaussianStd), n, rng);
    ds.name = "five-gaussians";
    return ds;
}

ToyKind parse_toy_kind(const std::string& name) {
    if (name == "moons") return ToyKind::moons;
    if (name == "circles") return ToyKind::circles;
    if (name == "blobs") return ToyKind::blobs;
    if (name == "varied") return ToyKind::varied;
    if (name == "aniso") return ToyKind::aniso;
    if (name == "no_structure" || name == "no-structure") return ToyKind::no_structure;
    throw ConfigError("unknown toy dataset '" + name + "'");
}

std::string to_string(ToyKind kind) {
    switch (kind) {
        case ToyKind::moons: return "moons";
        case ToyKind::circles: return "circles";
        case ToyKind::blobs: return "blobs";
        case ToyKind::varied: return "varied";
        case ToyKind::aniso: return "aniso";
        case ToyKind::no_structure: return "no_structure";
    }
    return "unknown";
}

double default_toy_noise(ToyKind kind) {
    return kind == ToyKind::moons || kind == ToyKind::circles ? 0.05 : 1.0;
}

Dataset gen_toy(ToyKind kind, std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2) throw DomainError("gen_toy: n must be at least 2");
    if (noise < 0.0) noise = default_toy_noise(kind);
    Rng rng(seed);
    Dataset ds;
    const double pi = std::numbers::pi;
    const std::size_t n_out = n / 2, n_in = n - n_out;

    switch (kind) {
        case ToyKind::moons:
        case ToyKind::circles: {
            ds.features = Matrix(n, 2);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n_out; ++i) {
                double a, b;
                if (kind == ToyKind::moons) {
                    const double t = n_out > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_out - 1) : 0.0;
                    a = std::cos(t);
                    b = std::sin(t);
                } else {
                    const double t = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n_out);
                    a = std::cos(t);
                    b = std::sin(t);
                }
                ds.features(i, 0) = a;
                ds.features(i, 1) = b;
                labels[i] = 0;
            }
            for (std::size_t i = 0; i < n_in; ++i) {
                double a, b;
                if (kind == ToyKind::moons) {
                    const double t = n_in > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_in - 1) : 0.0;
                    a = 1.0 - std::cos(t);
                    b = 1.0 - std::sin(t) - 0.5;
                } else {
                    const double t = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n_in);
                    a = 0.5 * std::cos(t);
                    b = 0.5 * std::sin(t);
                }
                ds.features(n_out + i, 0) = a;
                ds.features(n_out + i, 1) = b;
                labels[n_out + i] = 1;
            }
            if (noise > 0.0)
                for (double& v : ds.features.values()) v += rng.normal(0.0, noise);
            ds.labels = std::move(labels);
            ds.k_true = 2;
            break;
        }
        case ToyKind::blobs:
        case ToyKind::aniso: {
            const Matrix centers{{-6.0, -3.0}, {6.0, -3.0}, {0.0, 7.0}};
            ds = blob_family(centers, std::vector<double>(3, noise), n, rng);
            if (kind == ToyKind::aniso) ds.features = matmul(ds.features, Matrix{{0.6, -0.6}, {-0.4, 0.8}});
            break;
        }
        case ToyKind::varied: {
            const Matrix centers{{-6.0, -3.0}, {6.0, -3.0}, {0.0, 7.0}};
            ds = blob_family(centers, {1.0 * noise, 2.5 * noise, 0.5 * noise}, n, rng);
            break;
        }
        case ToyKind::no_structure: {
            ds.features = sample_uniform(rng, n, 2, 0.0, 1.0);
            ds.labels = std::vector<int>(n, 0);
            ds.k_true = 1;
            break;
        }
    }
    ds.name = to_string(kind);
    return ds;
}

Matrix minmax_normalize(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double lo = x.rows() ? x(0, j) : 0.0, hi = lo;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            lo = std::min(lo, x(i, j));
            hi = std::max(hi, x(i, j));
        }
        const double range = hi - lo;
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = range > 0.0 ? (x(i, j) - lo) / range : 0.0;
    }
    return out;
}

std::string data_dir() {
    if (const char* env = std::getenv("CLMOD_DATA_DIR"); env && *env) return env;
#ifdef CLMOD_DEFAULT_DATA_DIR
    return CLMOD_DEFAULT_DATA_DIR;
#else
    return "data";
#endif
}

Dataset load_named_dataset(const std::string& name) {
    std::string file;
    if (name == "iris") file = "iris.csv";
    else if (name == "wine") file = "wine.csv";
    else if (name == "pendigit" || name == "pendigits") file = "pendigits.csv";
    else throw ConfigError("unknown named dataset '" + name + "'");
    const std::string path = (std::filesystem::path(data_dir()) / file).string();
    // Shipped files carry the class label in the last column.
    std::ifstream probe(path);
    if (!probe) throw FileNotFoundError(path + ": cannot open file");
    std::string first;
    std::getline(probe, first);
    const std::size_t width = split_commas(first).size();
    Dataset ds = load_csv(path, false, width - 1);
    ds.name = name == "pendigits" ? "pendigit" : name;
    return ds;
}

}  // namespace clmod
