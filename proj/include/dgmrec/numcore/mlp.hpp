#pragma once

#include "dgmrec/numcore/autograd.hpp"

#include <random>
#include <string>
#include <vector>

namespace dgmrec {

/// Layer widths including the input width, e.g. {in, hidden, out} is a
/// 2-layer net. Hidden layers use a leaky rectifier; the output is linear.
struct MlpSpec {
    std::vector<Index> widths;
    double leaky_slope = 0.2;

    std::size_t num_layers() const { return widths.empty() ? 0 : widths.size() - 1; }
    Index in_width() const { return widths.front(); }
    Index out_width() const { return widths.back(); }

    void validate() const {
        if (widths.size() < 2) {
            throw std::invalid_argument("MLP needs at least one layer");
        }
        for (auto w : widths) {
            if (w <= 0) {
                throw std::invalid_argument("MLP widths must be positive");
            }
        }
    }
};

/// Xavier-uniform weights, zero biases.
inline Mat xavier_uniform(Index rows, Index cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

/// Affine stack whose parameters live in a ParamStore.
class Mlp {
public:
    Mlp() = default;

    Mlp(ParamStore& store, const std::string& name, MlpSpec spec, std::mt19937_64& rng)
        : spec_(std::move(spec)) {
        spec_.validate();
        for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
            const auto tag = name + ".l" + std::to_string(l);
            weights_.push_back(&store.add(tag + ".weight", xavier_uniform(spec_.widths[l], spec_.widths[l + 1], rng)));
            biases_.push_back(&store.add(tag + ".bias", Mat::Zero(1, spec_.widths[l + 1])));
        }
    }

    const MlpSpec& spec() const { return spec_; }
    ParamTensor& weight(std::size_t layer) { return *weights_.at(layer); }
    ParamTensor& bias(std::size_t layer) { return *biases_.at(layer); }
    const ParamTensor& weight(std::size_t layer) const { return *weights_.at(layer); }
    const ParamTensor& bias(std::size_t layer) const { return *biases_.at(layer); }

    /// Records the forward pass. With `frozen`, weights enter the tape as
    /// constants so gradients reach only the input.
    Var forward(Tape& t, Var x, bool frozen = false) const {
        if (t.value(x).cols() != spec_.in_width()) {
            throw std::invalid_argument("MLP input width " + std::to_string(t.value(x).cols()) + " != " +
                                        std::to_string(spec_.in_width()));
        }
        Var h = x;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            Var w = frozen ? t.constant(weights_[l]->value) : t.param(*weights_[l]);
            Var b = frozen ? t.constant(biases_[l]->value) : t.param(*biases_[l]);
            h = ops::add_row(ops::matmul(h, w), b);
            if (l + 1 < weights_.size()) {
                h = ops::leaky_relu(h, spec_.leaky_slope);
            }
        }
        return h;
    }

    Mat eval(const Mat& x) const {
        if (x.cols() != spec_.in_width()) {
            throw std::invalid_argument("MLP input width mismatch");
        }
        Mat h = x;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            Mat next = h * weights_[l]->value;
            next.rowwise() += biases_[l]->value.row(0);
            if (l + 1 < weights_.size()) {
                next = next.unaryExpr([s = spec_.leaky_slope](double v) { return v > 0 ? v : s * v; });
            }
            h = std::move(next);
        }
        return h;
    }

    std::vector<ParamTensor*> params() const {
        std::vector<ParamTensor*> out;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            out.push_back(weights_[l]);
            out.push_back(biases_[l]);
        }
        return out;
    }

private:
    MlpSpec spec_;
    std::vector<ParamTensor*> weights_;
    std::vector<ParamTensor*> biases_;
};

} // namespace dgmrec
