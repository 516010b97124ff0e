#include "clmod/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clmod/error.hpp"

namespace clmod::ad {

namespace {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string("ad::") + op + ": shape mismatch " +
                             shape_str(a.value()) + " vs " + shape_str(b.value()));
    }
}

Tape& tape_of(Var a, Var b) {
    if (a.tape != b.tape || a.tape == nullptr) throw Error("ad: operands live on different tapes");
    return *a.tape;
}

template <class F>
Matrix map(const Matrix& a, F f) {
    Matrix out(a.rows(), a.cols());
    auto in = a.values();
    auto o = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
    return out;
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw DimensionError("Var::scalar on " + shape_str(v));
    return v(0, 0);
}

Var Tape::leaf(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
    return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (backward_done_) throw Error("ad::Tape: cannot record after backward");
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [&](std::size_t p) { return nodes_[p].needs_grad; });
    nodes_.push_back(Node{std::move(value), {}, std::move(parents),
                          needs ? std::move(backward) : nullptr, needs});
    return Var{this, nodes_.size() - 1};
}

const Matrix& Tape::grad(std::size_t id) const {
    if (!backward_done_) throw Error("ad::Tape: gradient requested before backward");
    return nodes_[id].grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    n.grad += g;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw Error("ad::Tape: loss recorded on another tape");
    if (backward_done_) throw Error("ad::Tape: backward already ran on this tape");
    const Matrix& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw DimensionError("ad::Tape::backward: loss must be 1x1, got " + shape_str(lv));
    }
    backward_done_ = true;
    for (auto& n : nodes_) {
        if (n.needs_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    if (!nodes_[loss.id].needs_grad) return;
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward) n.backward(*this, i);
    }
}

Var add(Var a, Var b) {
    same_shape(a, b, "add");
    Tape& t = tape_of(a, b);
    return t.record(a.value() + b.value(), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
        t.accumulate(a.id, t.upstream(self));
        t.accumulate(b.id, t.upstream(self));
    });
}

Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    Tape& t = tape_of(a, b);
    return t.record(a.value() - b.value(), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
        t.accumulate(a.id, t.upstream(self));
        if (t.needs_grad(b.id)) t.accumulate(b.id, -1.0 * t.upstream(self));
    });
}

Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    Tape& t = tape_of(a, b);
    return t.record(hadamard(a.value(), b.value()), {a.id, b.id},
                    [a, b](Tape& t, std::size_t self) {
                        const Matrix& g = t.upstream(self);
                        if (t.needs_grad(a.id)) t.accumulate(a.id, hadamard(g, t.value(b.id)));
                        if (t.needs_grad(b.id)) t.accumulate(b.id, hadamard(g, t.value(a.id)));
                    });
}

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    return t.record(clmod::matmul(a.value(), b.value()), {a.id, b.id},
                    [a, b](Tape& t, std::size_t self) {
                        const Matrix& g = t.upstream(self);
                        if (t.needs_grad(a.id))
                            t.accumulate(a.id, clmod::matmul(g, t.value(b.id).transposed()));
                        if (t.needs_grad(b.id))
                            t.accumulate(b.id, clmod::matmul(t.value(a.id).transposed(), g));
                    });
}

Var transpose(Var a) {
    return a.tape->record(a.value().transposed(), {a.id}, [a](Tape& t, std::size_t self) {
        t.accumulate(a.id, t.upstream(self).transposed());
    });
}

Var add_row_broadcast(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw DimensionError("ad::add_row_broadcast: row " + shape_str(row.value()) +
                             " does not fit " + shape_str(a.value()));
    }
    Tape& t = tape_of(a, row);
    Matrix out = a.value();
    const Matrix& r = row.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += r(0, j);
    return t.record(std::move(out), {a.id, row.id}, [a, row](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        t.accumulate(a.id, g);
        if (t.needs_grad(row.id)) {
            Matrix colsum(1, g.cols());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) colsum(0, j) += g(i, j);
            t.accumulate(row.id, colsum);
        }
    });
}

Var scale(Var a, double s) {
    return a.tape->record(a.value() * s, {a.id}, [a, s](Tape& t, std::size_t self) {
        t.accumulate(a.id, t.upstream(self) * s);
    });
}

Var square(Var a) {
    return a.tape->record(hadamard(a.value(), a.value()), {a.id},
                          [a](Tape& t, std::size_t self) {
                              t.accumulate(a.id,
                                           hadamard(t.upstream(self), t.value(a.id)) * 2.0);
                          });
}

Var sum(Var a) {
    Matrix out(1, 1, clmod::sum(a.value()));
    return a.tape->record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
        const Matrix& v = t.value(a.id);
        t.accumulate(a.id, Matrix(v.rows(), v.cols(), t.upstream(self)(0, 0)));
    });
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw DimensionError("ad::mean of empty matrix");
    Matrix out(1, 1, clmod::sum(a.value()) / n);
    return a.tape->record(std::move(out), {a.id}, [a, n](Tape& t, std::size_t self) {
        const Matrix& v = t.value(a.id);
        t.accumulate(a.id, Matrix(v.rows(), v.cols(), t.upstream(self)(0, 0) / n));
    });
}

Var column_mean(Var a) {
    const Matrix& v = a.value();
    if (v.rows() == 0) throw DimensionError("ad::column_mean of empty matrix");
    const double n = static_cast<double>(v.rows());
    Matrix out(1, v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) out(0, j) += v(i, j);
    out *= 1.0 / n;
    return a.tape->record(std::move(out), {a.id}, [a, n](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        const Matrix& v = t.value(a.id);
        Matrix ga(v.rows(), v.cols());
        for (std::size_t i = 0; i < v.rows(); ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) ga(i, j) = g(0, j) / n;
        t.accumulate(a.id, ga);
    });
}

Var log(Var a) {
    for (double v : a.value().values()) {
        if (std::isnan(v)) throw NumericalError("ad::log: NaN argument");
        if (!(v > 0.0)) {
            std::ostringstream os;
            os << "ad::log: non-positive argument " << v;
            throw DomainError(os.str());
        }
    }
    return a.tape->record(map(a.value(), [](double v) { return std::log(v); }), {a.id},
                          [a](Tape& t, std::size_t self) {
                              const Matrix& g = t.upstream(self);
                              const Matrix& v = t.value(a.id);
                              Matrix ga(v.rows(), v.cols());
                              auto gv = g.values();
                              auto vv = v.values();
                              auto out = ga.values();
                              for (std::size_t i = 0; i < out.size(); ++i) out[i] = gv[i] / vv[i];
                              t.accumulate(a.id, ga);
                          });
}

Var clamp_min(Var a, double floor) {
    return a.tape->record(map(a.value(), [floor](double v) { return std::max(v, floor); }),
                          {a.id}, [a, floor](Tape& t, std::size_t self) {
                              const Matrix& g = t.upstream(self);
                              const Matrix& v = t.value(a.id);
                              Matrix ga(v.rows(), v.cols());
                              auto gv = g.values();
                              auto vv = v.values();
                              auto out = ga.values();
                              for (std::size_t i = 0; i < out.size(); ++i)
                                  out[i] = vv[i] > floor ? gv[i] : 0.0;
                              t.accumulate(a.id, ga);
                          });
}

Var abs(Var a) {
    return a.tape->record(map(a.value(), [](double v) { return std::abs(v); }), {a.id},
                          [a](Tape& t, std::size_t self) {
                              const Matrix& g = t.upstream(self);
                              const Matrix& v = t.value(a.id);
                              Matrix ga(v.rows(), v.cols());
                              auto gv = g.values();
                              auto vv = v.values();
                              auto out = ga.values();
                              for (std::size_t i = 0; i < out.size(); ++i) {
                                  const double s = vv[i] > 0.0 ? 1.0 : (vv[i] < 0.0 ? -1.0 : 0.0);
                                  out[i] = s * gv[i];
                              }
                              t.accumulate(a.id, ga);
                          });
}

Var leaky_relu(Var a, double slope) {
    return a.tape->record(
        map(a.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), {a.id},
        [a, slope](Tape& t, std::size_t self) {
            const Matrix& g = t.upstream(self);
            const Matrix& v = t.value(a.id);
            Matrix ga(v.rows(), v.cols());
            auto gv = g.values();
            auto vv = v.values();
            auto out = ga.values();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = vv[i] > 0.0 ? gv[i] : slope * gv[i];
            t.accumulate(a.id, ga);
        });
}

Var row_softmax(Var a) {
    return a.tape->record(clmod::row_softmax(a.value()), {a.id}, [a](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        const Matrix& s = t.value(self);
        Matrix ga(s.rows(), s.cols());
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < s.cols(); ++j) dot += g(i, j) * s(i, j);
            for (std::size_t j = 0; j < s.cols(); ++j) ga(i, j) = s(i, j) * (g(i, j) - dot);
        }
        t.accumulate(a.id, ga);
    });
}

GradCheckReport finite_diff_check(const GraphFn& f, const std::vector<Matrix>& params, double h,
                                  double tol) {
    auto evaluate = [&](const std::vector<Matrix>& ps) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(ps.size());
        for (const auto& p : ps) vars.push_back(tape.constant(p));
        return f(tape, vars).scalar();
    };

    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(tape.leaf(p));
    Var loss = f(tape, vars);
    tape.backward(loss);

    GradCheckReport report;
    std::vector<Matrix> probe = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const Matrix& g = vars[p].grad();
        double worst = 0.0;
        auto pv = probe[p].values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double orig = pv[i];
            pv[i] = orig + h;
            const double up = evaluate(probe);
            pv[i] = orig - h;
            const double down = evaluate(probe);
            pv[i] = orig;
            const double fd = (up - down) / (2.0 * h);
            const double a = g.values()[i];
            const double denom = std::max({1.0, std::abs(a), std::abs(fd)});
            worst = std::max(worst, std::abs(a - fd) / denom);
        }
        report.max_rel_error.push_back(worst);
        report.worst = std::max(report.worst, worst);
    }
    report.passed = report.worst <= tol;
    return report;
}

}  // namespace clmod::ad
