#pragma once

#include "dgmrec/numcore/tensor.hpp"

#include <cmath>
#include <vector>

namespace dgmrec {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. step() zeroes the
/// gradients it consumed.
class Adam {
public:
    Adam() = default;

    Adam(std::vector<ParamTensor*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
        for (auto* p : params_) {
            m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void step() {
        ++t_;
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = *params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad;
            v = config_.beta2 * v + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
            p.value.array() -= config_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
            p.zero_grad();
        }
    }

    void zero_grad() {
        for (auto* p : params_) {
            p->zero_grad();
        }
    }

    long long steps() const { return t_; }
    const AdamConfig& config() const { return config_; }
    const Mat& first_moment(std::size_t k) const { return m_.at(k); }
    const Mat& second_moment(std::size_t k) const { return v_.at(k); }

private:
    std::vector<ParamTensor*> params_;
    AdamConfig config_;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
    long long t_ = 0;
};

} // namespace dgmrec
