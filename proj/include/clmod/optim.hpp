#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clmod/matrix.hpp"

namespace clmod {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First-order optimizer over a fixed list of parameter matrices. Moment
// buffers are allocated lazily on the first step.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::vector<Matrix*> params);

    // One update. grads[i] == nullptr leaves params[i] untouched and does
    // not advance its moments.
    void step(std::span<const Matrix* const> grads);

    std::size_t steps() const { return t_; }
    const OptimizerConfig& config() const { return config_; }

private:
    OptimizerConfig config_;
    std::vector<Matrix*> params_;
    std::vector<Matrix> m_, v_;
    std::vector<std::size_t> t_param_;
    std::size_t t_ = 0;
};

}  // namespace clmod
