#pragma once

#include <string>
#include <vector>

#include "clmod/matrix.hpp"

namespace clmod::cli {

// 600×600 scatter of 2-D points coloured by assignment, centroids drawn as
// outlined squares in their cluster colour.
std::string scatter_svg(const Matrix& x, const std::vector<int>& labels, const Matrix& centroids);

}  // namespace clmod::cli
