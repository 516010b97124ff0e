#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clmod/matrix.hpp"

namespace clmod::ad {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double scalar() const;
};

// Append-only record of matrix operations. Nodes are stored in creation
// order, so parents always precede children and backward is a single
// reverse sweep. A tape supports exactly one backward pass.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // A differentiable input.
    Var leaf(Matrix value);
    // An input that never receives a gradient.
    Var constant(Matrix value);

    Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::size_t id) const;
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    // Adds `g` into the gradient buffer of node `id` when it tracks one.
    void accumulate(std::size_t id, const Matrix& g);
    const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var matmul(Var a, Var b);
Var transpose(Var a);
// a (n×m) plus the 1×m row `row` added to every row.
Var add_row_broadcast(Var a, Var row);
Var scale(Var a, double s);
Var square(Var a);
Var sum(Var a);   // 1×1
Var mean(Var a);  // 1×1
// Mean over rows, giving a 1×cols row.
Var column_mean(Var a);
Var log(Var a);
// max(a, floor); the gradient is zero wherever the floor is active.
Var clamp_min(Var a, double floor);
// Subgradient sign(0) = 0 at the kink.
Var abs(Var a);
Var leaky_relu(Var a, double slope);
Var row_softmax(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

struct GradCheckReport {
    // Per-parameter max of |ad - fd| / max(1, |ad|, |fd|).
    std::vector<double> max_rel_error;
    double worst = 0.0;
    bool passed = false;
};

using GraphFn = std::function<Var(Tape&, std::span<const Var>)>;

// Compares reverse-mode gradients of `f` at `params` against central
// differences with step `h`.
GradCheckReport finite_diff_check(const GraphFn& f, const std::vector<Matrix>& params, double h,
                                  double tol);

}  // namespace clmod::ad
