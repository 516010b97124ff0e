#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "clmod/error.hpp"

namespace clmod::cli {

namespace {

constexpr const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr double kSize = 600.0;
constexpr double kMargin = 20.0;

const char* colour(int label) { return label < 0 ? "#000000" : kPalette[label % 10]; }

}  // namespace

std::string scatter_svg(const Matrix& x, const std::vector<int>& labels, const Matrix& centroids) {
    if (x.cols() != 2 || (!centroids.empty() && centroids.cols() != 2))
        throw DimensionError("scatter_svg: points and centroids must be 2-D");
    if (labels.size() != x.rows()) throw DimensionError("scatter_svg: one label per point required");

    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    auto extend = [&](const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                lo[j] = std::min(lo[j], m(i, j));
                hi[j] = std::max(hi[j], m(i, j));
            }
    };
    extend(x);
    extend(centroids);
    const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-12});
    const double scale = (kSize - 2 * kMargin) / span;
    auto px = [&](double v) { return kMargin + (v - lo[0]) * scale; };
    // SVG y grows downwards.
    auto py = [&](double v) { return kSize - kMargin - (v - lo[1]) * scale; };

    std::ostringstream out;
    char buf[160];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 600 600\" width=\"600\" height=\"600\">\n";
    out << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" fill=\"%s\" fill-opacity=\"0.6\"/>\n",
                      px(x(i, 0)), py(x(i, 1)), colour(labels[i]));
        out << buf;
    }
    for (std::size_t k = 0; k < centroids.rows(); ++k) {
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"10\" height=\"10\" fill=\"%s\" stroke=\"black\" "
                      "stroke-width=\"1.5\"/>\n",
                      px(centroids(k, 0)) - 5, py(centroids(k, 1)) - 5, colour(static_cast<int>(k)));
        out << buf;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace clmod::cli
