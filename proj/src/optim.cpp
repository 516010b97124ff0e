#include "clmod/optim.hpp"

#include <cmath>

#include "clmod/error.hpp"

namespace clmod {

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

Optimizer::Optimizer(OptimizerConfig config, std::vector<Matrix*> params)
    : config_(config), params_(std::move(params)) {
    if (!(config_.lr > 0.0)) throw DomainError("optimizer: learning rate must be positive");
    m_.resize(params_.size());
    v_.resize(params_.size());
    t_param_.assign(params_.size(), 0);
}

void Optimizer::step(std::span<const Matrix* const> grads) {
    if (grads.size() != params_.size()) throw DimensionError("optimizer: gradient count mismatch");
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Matrix* g = grads[i];
        if (g == nullptr) continue;
        Matrix& p = *params_[i];
        if (g->rows() != p.rows() || g->cols() != p.cols())
            throw DimensionError("optimizer: gradient shape mismatch");
        auto pv = p.values();
        auto gv = g->values();
        if (config_.kind == OptimizerKind::sgd) {
            for (std::size_t j = 0; j < pv.size(); ++j) pv[j] -= config_.lr * gv[j];
            continue;
        }
        if (m_[i].rows() == 0) {
            m_[i] = Matrix(p.rows(), p.cols());
            v_[i] = Matrix(p.rows(), p.cols());
        }
        const std::size_t t = ++t_param_[i];
        const double b1 = config_.beta1, b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        auto mv = m_[i].values();
        auto vv = v_[i].values();
        for (std::size_t j = 0; j < pv.size(); ++j) {
            mv[j] = b1 * mv[j] + (1.0 - b1) * gv[j];
            vv[j] = b2 * vv[j] + (1.0 - b2) * gv[j] * gv[j];
            pv[j] -= config_.lr * (mv[j] / c1) / (std::sqrt(vv[j] / c2) + config_.eps);
        }
    }
}

}  // namespace clmod
