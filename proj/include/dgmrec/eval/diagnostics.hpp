#pragma once

#include "dgmrec/numcore/tensor.hpp"

#include <Eigen/QR>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// Similarity summary of one snapshot of the encodings.
struct DisentangleRecord {
    int epoch = 0;
    double general_specific_cos = 0.0;  // within-modality, mean over items and modalities
    double cross_general_cos = 0.0;     // across modality pairs, mean over items and pairs
    std::optional<double> probe_r2;     // general features -> planted shared latent
};

inline double mean_row_cosine(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
        throw std::invalid_argument("mean_row_cosine: shape mismatch");
    }
    double acc = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        acc += cosine(row_span(a, i), row_span(b, i));
    }
    return acc / static_cast<double>(a.rows());
}

/// Mean R^2 over target columns of an ordinary least-squares fit with
/// intercept.
inline double linear_probe_r2(const Mat& features, const Mat& target) {
    if (features.rows() != target.rows()) {
        throw std::invalid_argument("linear_probe_r2: row mismatch");
    }
    Mat design(features.rows(), features.cols() + 1);
    design << features, Mat::Ones(features.rows(), 1);
    const Mat coef = design.colPivHouseholderQr().solve(target);
    const Mat resid = target - design * coef;
    double r2 = 0.0;
    for (Index c = 0; c < target.cols(); ++c) {
        const double mean = target.col(c).mean();
        const double tot = (target.col(c).array() - mean).square().sum();
        const double res = resid.col(c).squaredNorm();
        r2 += tot > 0 ? 1.0 - res / tot : 0.0;
    }
    return r2 / static_cast<double>(target.cols());
}

inline DisentangleRecord disentangle_diagnostics(int epoch, const std::vector<Mat>& general,
                                                 const std::vector<Mat>& specific,
                                                 const std::optional<Mat>& shared_latent = std::nullopt) {
    if (general.size() != specific.size() || general.size() < 2) {
        throw std::invalid_argument("disentangle_diagnostics needs >= 2 modalities");
    }
    DisentangleRecord rec;
    rec.epoch = epoch;
    for (std::size_t m = 0; m < general.size(); ++m) {
        rec.general_specific_cos += mean_row_cosine(general[m], specific[m]);
    }
    rec.general_specific_cos /= static_cast<double>(general.size());
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < general.size(); ++m) {
        for (std::size_t n = m + 1; n < general.size(); ++n) {
            rec.cross_general_cos += mean_row_cosine(general[m], general[n]);
            ++pairs;
        }
    }
    rec.cross_general_cos /= static_cast<double>(pairs);
    if (shared_latent) {
        Mat all(general.front().rows(), general.front().cols() * static_cast<Index>(general.size()));
        for (std::size_t m = 0; m < general.size(); ++m) {
            all.middleCols(static_cast<Index>(m) * general[m].cols(), general[m].cols()) = general[m];
        }
        rec.probe_r2 = linear_probe_r2(all, *shared_latent);
    }
    return rec;
}

} // namespace dgmrec
