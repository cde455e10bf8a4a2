#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmrec {

using Index = Eigen::Index;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A named learnable matrix together with its accumulated gradient.
struct ParamTensor {
    std::string name;
    Mat value;
    Mat grad;

    ParamTensor(std::string n, Mat v)
        : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(); }
    bool finite() const { return value.allFinite() && grad.allFinite(); }
};

/// Owns parameters with stable addresses; insertion order is the
/// serialization order.
class ParamStore {
public:
    ParamTensor& add(const std::string& name, Mat value) {
        if (find(name) != nullptr) {
            throw std::invalid_argument("duplicate parameter name: " + name);
        }
        return params_.emplace_back(name, std::move(value));
    }

    ParamTensor* find(const std::string& name) {
        for (auto& p : params_) {
            if (p.name == name) {
                return &p;
            }
        }
        return nullptr;
    }

    const ParamTensor* find(const std::string& name) const {
        for (const auto& p : params_) {
            if (p.name == name) {
                return &p;
            }
        }
        return nullptr;
    }

    ParamTensor& at(const std::string& name) {
        auto* p = find(name);
        if (p == nullptr) {
            throw std::out_of_range("no parameter named " + name);
        }
        return *p;
    }

    std::vector<ParamTensor*> all() {
        std::vector<ParamTensor*> out;
        out.reserve(params_.size());
        for (auto& p : params_) {
            out.push_back(&p);
        }
        return out;
    }

    std::vector<const ParamTensor*> all() const {
        std::vector<const ParamTensor*> out;
        out.reserve(params_.size());
        for (const auto& p : params_) {
            out.push_back(&p);
        }
        return out;
    }

    void zero_grad() {
        for (auto& p : params_) {
            p.zero_grad();
        }
    }

    bool finite() const {
        for (const auto& p : params_) {
            if (!p.finite()) {
                return false;
            }
        }
        return true;
    }

    std::size_t size() const { return params_.size(); }

    std::size_t num_scalars() const {
        std::size_t n = 0;
        for (const auto& p : params_) {
            n += static_cast<std::size_t>(p.value.size());
        }
        return n;
    }

    /// Copies values only; used for best-epoch snapshots.
    std::vector<Mat> snapshot() const {
        std::vector<Mat> out;
        out.reserve(params_.size());
        for (const auto& p : params_) {
            out.push_back(p.value);
        }
        return out;
    }

    void restore(const std::vector<Mat>& values) {
        if (values.size() != params_.size()) {
            throw std::invalid_argument("snapshot size mismatch");
        }
        std::size_t i = 0;
        for (auto& p : params_) {
            if (values[i].rows() != p.value.rows() || values[i].cols() != p.value.cols()) {
                throw std::invalid_argument("snapshot shape mismatch for " + p.name);
            }
            p.value = values[i++];
        }
    }

private:
    std::deque<ParamTensor> params_;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::span<const double> row_span(const Mat& m, Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(Mat& m, Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

} // namespace dgmrec
