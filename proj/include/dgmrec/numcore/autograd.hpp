#pragma once

#include "dgmrec/numcore/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dgmrec {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

/// Reverse-mode recorder for matrix-valued expressions.
///
/// Every op pushes one node holding its forward value and a closure that
/// maps the node's output gradient to its parents. Parameter leaves add
/// their gradient into ParamTensor::grad when backward() runs, so repeated
/// forward/backward passes accumulate.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Mat&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Mat value) {
        Node n;
        n.value = std::move(value);
        return push(std::move(n));
    }

    Var param(ParamTensor& p) {
        Node n;
        n.value = p.value;
        n.param = &p;
        n.needs_grad = true;
        return push(std::move(n));
    }

    /// Records an op; `backward` receives this node's gradient and must call
    /// accumulate() on the parents it depends on.
    Var record(Mat value, std::initializer_list<Var> parents, BackwardFn backward) {
        return record(std::move(value), std::vector<Var>(parents), std::move(backward));
    }

    Var record(Mat value, const std::vector<Var>& parents, BackwardFn backward) {
        Node n;
        n.value = std::move(value);
        for (const auto& p : parents) {
            check_owned(p);
            n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
        }
        if (n.needs_grad) {
            n.backward = std::move(backward);
        }
        return push(std::move(n));
    }

    const Mat& value(Var v) const {
        check_owned(v);
        return nodes_[v.id].value;
    }

    bool needs_grad(Var v) const {
        check_owned(v);
        return nodes_[v.id].needs_grad;
    }

    /// Gradient of the last backward() with respect to v (zero if v did not
    /// participate).
    Mat grad(Var v) const {
        check_owned(v);
        const auto& n = nodes_[v.id];
        if (n.grad.size() == 0) {
            return Mat::Zero(n.value.rows(), n.value.cols());
        }
        return n.grad;
    }

    void accumulate(Var v, const Mat& g) {
        auto& n = nodes_[v.id];
        if (!n.needs_grad) {
            return;
        }
        if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
            throw std::logic_error("gradient shape mismatch in backward");
        }
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    void backward(Var loss) {
        check_owned(loss);
        if (consumed_) {
            throw std::logic_error("backward called twice on the same tape");
        }
        const auto& root = nodes_[loss.id];
        if (root.value.rows() != 1 || root.value.cols() != 1) {
            throw std::invalid_argument("backward requires a scalar (1x1) loss");
        }
        consumed_ = true;
        if (!root.needs_grad) {
            return;
        }
        nodes_[loss.id].grad = Mat::Ones(1, 1);
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (!n.needs_grad || n.grad.size() == 0) {
                continue;
            }
            if (n.param != nullptr) {
                n.param->grad += n.grad;
            } else if (n.backward) {
                // Copy: the closure may touch nodes_ through accumulate().
                Mat g = n.grad;
                n.backward(*this, g);
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        BackwardFn backward;
        ParamTensor* param = nullptr;
        bool needs_grad = false;
    };

    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    void check_owned(Var v) const {
        if (v.tape != this || v.id >= nodes_.size()) {
            throw std::logic_error("variable does not belong to this tape (backward without forward?)");
        }
    }

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

namespace ops {

inline void require_same_shape(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string("shape mismatch in ") + what);
    }
}

inline Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    if (av.cols() != bv.rows()) {
        throw std::invalid_argument("shape mismatch in matmul");
    }
    Mat out = av * bv;
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
        if (t.needs_grad(a)) {
            t.accumulate(a, g * t.value(b).transpose());
        }
        if (t.needs_grad(b)) {
            t.accumulate(b, t.value(a).transpose() * g);
        }
    });
}

/// x (n x c) plus a broadcast row vector b (1 x c).
inline Var add_row(Var x, Var b) {
    Tape& t = *x.tape;
    const Mat& xv = t.value(x);
    const Mat& bv = t.value(b);
    if (bv.rows() != 1 || bv.cols() != xv.cols()) {
        throw std::invalid_argument("shape mismatch in add_row");
    }
    Mat out = xv.rowwise() + bv.row(0);
    return t.record(std::move(out), {x, b}, [x, b](Tape& t, const Mat& g) {
        t.accumulate(x, g);
        if (t.needs_grad(b)) {
            t.accumulate(b, g.colwise().sum());
        }
    });
}

inline Var add(Var a, Var b) {
    Tape& t = *a.tape;
    require_same_shape(t.value(a), t.value(b), "add");
    Mat out = t.value(a) + t.value(b);
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

inline Var sub(Var a, Var b) {
    Tape& t = *a.tape;
    require_same_shape(t.value(a), t.value(b), "sub");
    Mat out = t.value(a) - t.value(b);
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
        t.accumulate(a, g);
        if (t.needs_grad(b)) {
            t.accumulate(b, -g);
        }
    });
}

inline Var scale(Var a, double s) {
    Tape& t = *a.tape;
    Mat out = t.value(a) * s;
    return t.record(std::move(out), {a}, [a, s](Tape& t, const Mat& g) { t.accumulate(a, g * s); });
}

/// Weighted sum of same-shaped operands.
inline Var linear_combination(const std::vector<std::pair<double, Var>>& terms) {
    if (terms.empty()) {
        throw std::invalid_argument("linear_combination of nothing");
    }
    Tape& t = *terms.front().second.tape;
    Mat out = Mat::Zero(t.value(terms.front().second).rows(), t.value(terms.front().second).cols());
    std::vector<Var> parents;
    for (const auto& [w, v] : terms) {
        require_same_shape(out, t.value(v), "linear_combination");
        out += w * t.value(v);
        parents.push_back(v);
    }
    return t.record(std::move(out), parents, [terms](Tape& t, const Mat& g) {
        for (const auto& [w, v] : terms) {
            if (t.needs_grad(v)) {
                t.accumulate(v, g * w);
            }
        }
    });
}

inline Var mean_of(const std::vector<Var>& vs) {
    std::vector<std::pair<double, Var>> terms;
    terms.reserve(vs.size());
    for (const auto& v : vs) {
        terms.emplace_back(1.0 / static_cast<double>(vs.size()), v);
    }
    return linear_combination(terms);
}

inline Var hadamard(Var a, Var b) {
    Tape& t = *a.tape;
    require_same_shape(t.value(a), t.value(b), "hadamard");
    Mat out = t.value(a).cwiseProduct(t.value(b));
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
        if (t.needs_grad(a)) {
            t.accumulate(a, g.cwiseProduct(t.value(b)));
        }
        if (t.needs_grad(b)) {
            t.accumulate(b, g.cwiseProduct(t.value(a)));
        }
    });
}

inline double sigmoid_scalar(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Var sigmoid(Var a) {
    Tape& t = *a.tape;
    Mat out = t.value(a).unaryExpr([](double x) { return sigmoid_scalar(x); });
    return t.record(std::move(out), {a}, [a](Tape& t, const Mat& g) {
        Mat s = t.value(a).unaryExpr([](double x) { return sigmoid_scalar(x); });
        t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
    });
}

inline Var leaky_relu(Var a, double slope) {
    Tape& t = *a.tape;
    Mat out = t.value(a).unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
    return t.record(std::move(out), {a}, [a, slope](Tape& t, const Mat& g) {
        const Mat& x = t.value(a);
        Mat d = g;
        for (Index i = 0; i < d.size(); ++i) {
            if (x.data()[i] <= 0) {
                d.data()[i] *= slope;
            }
        }
        t.accumulate(a, d);
    });
}

/// Elementwise clamp; gradient passes only strictly inside [lo, hi].
inline Var clamp(Var a, double lo, double hi) {
    Tape& t = *a.tape;
    Mat out = t.value(a).cwiseMax(lo).cwiseMin(hi);
    return t.record(std::move(out), {a}, [a, lo, hi](Tape& t, const Mat& g) {
        const Mat& x = t.value(a);
        Mat d = g;
        for (Index i = 0; i < d.size(); ++i) {
            const double v = x.data()[i];
            if (v < lo || v > hi) {
                d.data()[i] = 0.0;
            }
        }
        t.accumulate(a, d);
    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat_cols of nothing");
    }
    Tape& t = *parts.front().tape;
    const Index rows = t.value(parts.front()).rows();
    Index cols = 0;
    for (const auto& p : parts) {
        if (t.value(p).rows() != rows) {
            throw std::invalid_argument("row mismatch in concat_cols");
        }
        cols += t.value(p).cols();
    }
    Mat out(rows, cols);
    Index c = 0;
    for (const auto& p : parts) {
        const Mat& v = t.value(p);
        out.middleCols(c, v.cols()) = v;
        c += v.cols();
    }
    return t.record(std::move(out), parts, [parts](Tape& t, const Mat& g) {
        Index c = 0;
        for (const auto& p : parts) {
            const Index w = t.value(p).cols();
            if (t.needs_grad(p)) {
                t.accumulate(p, g.middleCols(c, w));
            }
            c += w;
        }
    });
}

/// Column block [start, start + width).
inline Var slice_cols(Var a, Index start, Index width) {
    Tape& t = *a.tape;
    const Mat& av = t.value(a);
    if (start < 0 || width < 0 || start + width > av.cols()) {
        throw std::invalid_argument("slice_cols out of range");
    }
    Mat out = av.middleCols(start, width);
    return t.record(std::move(out), {a}, [a, start, width](Tape& t, const Mat& g) {
        Mat d = Mat::Zero(t.value(a).rows(), t.value(a).cols());
        d.middleCols(start, width) = g;
        t.accumulate(a, d);
    });
}

inline Var gather_rows(Var a, std::vector<Index> rows) {
    Tape& t = *a.tape;
    const Mat& av = t.value(a);
    Mat out(static_cast<Index>(rows.size()), av.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= av.rows()) {
            throw std::out_of_range("gather_rows index out of range");
        }
        out.row(static_cast<Index>(r)) = av.row(rows[r]);
    }
    return t.record(std::move(out), {a}, [a, rows = std::move(rows)](Tape& t, const Mat& g) {
        Mat d = Mat::Zero(t.value(a).rows(), t.value(a).cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            d.row(rows[r]) += g.row(static_cast<Index>(r));
        }
        t.accumulate(a, d);
    });
}

/// Sparse (fixed) matrix times a recorded dense value.
inline Var spmm(std::shared_ptr<const SpMat> s, Var a) {
    Tape& t = *a.tape;
    const Mat& av = t.value(a);
    if (s->cols() != av.rows()) {
        throw std::invalid_argument("shape mismatch in spmm");
    }
    Mat out = (*s) * av;
    return t.record(std::move(out), {a}, [s, a](Tape& t, const Mat& g) {
        t.accumulate(a, s->transpose() * g);
    });
}

/// Row-wise inner products: (n x c, n x c) -> n x 1.
inline Var rowwise_dot(Var a, Var b) {
    Tape& t = *a.tape;
    require_same_shape(t.value(a), t.value(b), "rowwise_dot");
    Mat out = t.value(a).cwiseProduct(t.value(b)).rowwise().sum();
    return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
        if (t.needs_grad(a)) {
            t.accumulate(a, t.value(b).array().colwise() * g.col(0).array());
        }
        if (t.needs_grad(b)) {
            t.accumulate(b, t.value(a).array().colwise() * g.col(0).array());
        }
    });
}

inline Var sum_all(Var a) {
    Tape& t = *a.tape;
    Mat out(1, 1);
    out(0, 0) = t.value(a).sum();
    return t.record(std::move(out), {a}, [a](Tape& t, const Mat& g) {
        t.accumulate(a, Mat::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
    });
}

inline Var mean_all(Var a) {
    Tape& t = *a.tape;
    const double n = static_cast<double>(t.value(a).size());
    if (n == 0) {
        throw std::invalid_argument("mean of empty matrix");
    }
    return scale(sum_all(a), 1.0 / n);
}

inline Var detach(Var a) {
    Tape& t = *a.tape;
    return t.constant(t.value(a));
}

} // namespace ops
} // namespace dgmrec
