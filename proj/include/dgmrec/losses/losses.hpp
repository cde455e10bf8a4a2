#pragma once

#include "dgmrec/numcore/adam.hpp"
#include "dgmrec/numcore/autograd.hpp"
#include "dgmrec/numcore/mlp.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// Scalar value of each objective term for one batch.
struct LossBreakdown {
    double bpr = 0.0;
    double recon = 0.0;
    double gen = 0.0;
    double club = 0.0;
    double infonce = 0.0;
    double bm_align = 0.0;
    double ui_align = 0.0;
    double total = 0.0;

    bool finite() const {
        for (double v : {bpr, recon, gen, club, infonce, bm_align, ui_align, total}) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    LossBreakdown& operator+=(const LossBreakdown& o) {
        bpr += o.bpr;
        recon += o.recon;
        gen += o.gen;
        club += o.club;
        infonce += o.infonce;
        bm_align += o.bm_align;
        ui_align += o.ui_align;
        total += o.total;
        return *this;
    }

    LossBreakdown scaled(double s) const {
        LossBreakdown r = *this;
        for (double* v : {&r.bpr, &r.recon, &r.gen, &r.club, &r.infonce, &r.bm_align, &r.ui_align, &r.total}) {
            *v *= s;
        }
        return r;
    }
};

/// total = bpr + recon + gen + lambda1 (club + infonce) + lambda2 (bm + ui).
inline LossBreakdown total_loss(LossBreakdown parts, double lambda1, double lambda2) {
    parts.total = parts.bpr + parts.recon + parts.gen + lambda1 * (parts.club + parts.infonce) +
                  lambda2 * (parts.bm_align + parts.ui_align);
    return parts;
}

enum class BprForm { log_sigmoid, neg_sigmoid };

namespace losses {

/// Mean over anchors of -log softmax_j(a_i . p_j / tau)[i]; the candidate
/// set is every positive row in the batch.
inline Var infonce(Var anchor, Var positive, double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("InfoNCE temperature must be positive");
    }
    Tape& t = *anchor.tape;
    const Mat& a = t.value(anchor);
    const Mat& p = t.value(positive);
    ops::require_same_shape(a, p, "infonce");
    const Index n = a.rows();
    if (n == 0) {
        throw std::invalid_argument("InfoNCE on an empty batch");
    }
    Mat logits = (a * p.transpose()) / tau;
    Mat soft(n, n);
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double mx = logits.row(i).maxCoeff();
        soft.row(i) = (logits.row(i).array() - mx).exp();
        const double z = soft.row(i).sum();
        soft.row(i) /= z;
        loss += -(logits(i, i) - mx - std::log(z));
    }
    Mat out(1, 1);
    out(0, 0) = loss / static_cast<double>(n);
    return t.record(std::move(out), {anchor, positive},
                    [anchor, positive, soft = std::move(soft), tau, n](Tape& t, const Mat& g) {
                        Mat dlogits = soft;
                        dlogits.diagonal().array() -= 1.0;
                        dlogits *= g(0, 0) / (static_cast<double>(n) * tau);
                        if (t.needs_grad(anchor)) {
                            t.accumulate(anchor, dlogits * t.value(positive));
                        }
                        if (t.needs_grad(positive)) {
                            t.accumulate(positive, dlogits.transpose() * t.value(anchor));
                        }
                    });
}

/// Mean squared error against a fixed target, averaged over all entries.
inline Var mse(Var pred, const Mat& target) {
    Tape& t = *pred.tape;
    const Mat& p = t.value(pred);
    ops::require_same_shape(p, target, "mse");
    if (p.size() == 0) {
        throw std::invalid_argument("mse over an empty set");
    }
    Mat diff = p - target;
    Mat out(1, 1);
    out(0, 0) = diff.squaredNorm() / static_cast<double>(diff.size());
    return t.record(std::move(out), {pred}, [pred, diff = std::move(diff)](Tape& t, const Mat& g) {
        t.accumulate(pred, diff * (2.0 * g(0, 0) / static_cast<double>(diff.size())));
    });
}

inline std::vector<Index> mask_rows(std::span<const std::uint8_t> mask) {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            rows.push_back(static_cast<Index>(i));
        }
    }
    return rows;
}

/// MSE between raw and reconstructed features over rows whose modality is
/// available.
inline Var recon_loss(const Mat& x, Var x_bar, std::span<const std::uint8_t> available) {
    Tape& t = *x_bar.tape;
    if (static_cast<std::size_t>(t.value(x_bar).rows()) != available.size() || x.rows() != t.value(x_bar).rows()) {
        throw std::invalid_argument("recon_loss: row count mismatch");
    }
    auto rows = mask_rows(available);
    if (rows.empty()) {
        throw std::invalid_argument("recon_loss: no available items");
    }
    Mat target(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        target.row(static_cast<Index>(r)) = x.row(rows[r]);
    }
    return mse(ops::gather_rows(x_bar, rows), target);
}

/// MSE(general, generated general) + MSE(specific, generated specific) over
/// available rows. The encoder-side features act as fixed targets.
inline Var gen_loss(Var general, Var specific, Var gen_general, Var gen_specific,
                    std::span<const std::uint8_t> available) {
    Tape& t = *general.tape;
    auto rows = mask_rows(available);
    if (rows.empty()) {
        throw std::invalid_argument("gen_loss: no available items");
    }
    if (static_cast<std::size_t>(t.value(general).rows()) != available.size()) {
        throw std::invalid_argument("gen_loss: row count mismatch");
    }
    auto pick = [&](const Mat& m) {
        Mat out(static_cast<Index>(rows.size()), m.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.row(static_cast<Index>(r)) = m.row(rows[r]);
        }
        return out;
    };
    Var lg = mse(ops::gather_rows(gen_general, rows), pick(t.value(general)));
    Var ls = mse(ops::gather_rows(gen_specific, rows), pick(t.value(specific)));
    return ops::add(lg, ls);
}

/// CLUB estimate for a diagonal Gaussian q(g | s) with mean `mu` and
/// log-variance `logvar` computed from s:
///   mean_i [ log q(g_i|s_i) - mean_j log q(g_j|s_i) ].
/// The normalizer cancels between the two terms, so only the weighted
/// squared distances remain.
inline Var club_from_moments(Var general, Var mu, Var logvar) {
    Tape& t = *general.tape;
    const Mat& g = t.value(general);
    const Mat& m = t.value(mu);
    const Mat& lv = t.value(logvar);
    ops::require_same_shape(g, m, "club");
    ops::require_same_shape(g, lv, "club");
    const Index n = g.rows();
    if (n == 0) {
        throw std::invalid_argument("CLUB on an empty batch");
    }
    const double c = 1.0 / static_cast<double>(n);
    Mat w = (-lv.array()).exp().matrix();
    Mat s1 = g.colwise().mean();
    Mat s2 = g.cwiseAbs2().colwise().mean();

    // Mean over j of (g_j - mu_i)^2, per (i, d).
    Mat spread = (-2.0 * m.array()).rowwise() * s1.row(0).array();
    spread = spread.array() + m.array().square();
    spread = spread.array().rowwise() + s2.row(0).array();
    Mat pos_sq = (g - m).cwiseAbs2();
    double value = 0.0;
    for (Index i = 0; i < n; ++i) {
        value += 0.5 * (w.row(i).cwiseProduct(spread.row(i) - pos_sq.row(i))).sum();
    }
    Mat out(1, 1);
    out(0, 0) = value * c;
    return t.record(std::move(out), {general, mu, logvar},
                    [general, mu, logvar, w, s1, spread, pos_sq, c, n](Tape& t, const Mat& grad) {
                        const double gs = grad(0, 0);
                        const Mat& g = t.value(general);
                        const Mat& m = t.value(mu);
                        if (t.needs_grad(general)) {
                            // Positive term pulls toward mu_i; the negative
                            // term couples every g_k to all means.
                            Mat d = -(w.cwiseProduct(g - m));
                            Mat wsum = w.colwise().sum();
                            Mat wmu = w.cwiseProduct(m).colwise().sum();
                            Mat neg = (g.array().rowwise() * wsum.row(0).array()).rowwise() - wmu.row(0).array();
                            d += neg / static_cast<double>(n);
                            t.accumulate(general, d * (gs * c));
                        }
                        if (t.needs_grad(mu)) {
                            Mat centered = g.rowwise() - s1.row(0);
                            t.accumulate(mu, w.cwiseProduct(centered) * (gs * c));
                        }
                        if (t.needs_grad(logvar)) {
                            Mat d = 0.5 * w.cwiseProduct(pos_sq - spread);
                            t.accumulate(logvar, d * (gs * c));
                        }
                    });
}

/// Runs the variational net on `s` and splits its output into mean and
/// clamped log-variance halves.
struct GaussianHead {
    Var mean;
    Var logvar;
};

inline constexpr double kLogVarMin = -8.0;
inline constexpr double kLogVarMax = 8.0;

inline GaussianHead variational_head(const Mlp& q, Var s, bool frozen) {
    Tape& t = *s.tape;
    Var out = q.forward(t, s, frozen);
    const Index d = t.value(out).cols() / 2;
    return {ops::slice_cols(out, 0, d), ops::clamp(ops::slice_cols(out, d, d), kLogVarMin, kLogVarMax)};
}

/// CLUB with q frozen: gradients reach `general` and `specific` only.
inline Var club_loss(Var general, Var specific, const Mlp& q) {
    auto head = variational_head(q, specific, true);
    return club_from_moments(general, head.mean, head.logvar);
}

/// Mean over rows of log N(g; mu, diag(exp(logvar))).
inline Var gaussian_loglik(Var general, Var mu, Var logvar) {
    Tape& t = *general.tape;
    const Mat& g = t.value(general);
    const Mat& m = t.value(mu);
    const Mat& lv = t.value(logvar);
    ops::require_same_shape(g, m, "gaussian_loglik");
    ops::require_same_shape(g, lv, "gaussian_loglik");
    const Index n = g.rows();
    Mat w = (-lv.array()).exp().matrix();
    Mat diff = g - m;
    const double log2pi = std::log(2.0 * std::numbers::pi);
    double value = -0.5 * ((diff.cwiseAbs2().cwiseProduct(w)).sum() + lv.sum() + log2pi * static_cast<double>(g.size()));
    Mat out(1, 1);
    out(0, 0) = value / static_cast<double>(n);
    return t.record(std::move(out), {general, mu, logvar}, [general, mu, logvar, w, diff, n](Tape& t, const Mat& grad) {
        const double s = grad(0, 0) / static_cast<double>(n);
        Mat wd = w.cwiseProduct(diff);
        if (t.needs_grad(general)) {
            t.accumulate(general, -wd * s);
        }
        if (t.needs_grad(mu)) {
            t.accumulate(mu, wd * s);
        }
        if (t.needs_grad(logvar)) {
            Mat d = 0.5 * (diff.cwiseAbs2().cwiseProduct(w).array() - 1.0).matrix();
            t.accumulate(logvar, d * s);
        }
    });
}

/// Mean conditional log-likelihood of `general` given `specific` under q.
inline double variational_loglik(const Mlp& q, const Mat& general, const Mat& specific) {
    Tape t;
    auto head = variational_head(q, t.constant(specific), true);
    return t.value(gaussian_loglik(t.constant(general), head.mean, head.logvar))(0, 0);
}

/// Maximizes the mean log q(general | specific) for `steps` Adam steps with
/// the encodings held fixed. Returns the log-likelihood before each step.
inline std::vector<double> fit_variational(const Mlp& q, Adam& opt, const Mat& general, const Mat& specific,
                                           int steps) {
    std::vector<double> trace;
    for (int s = 0; s < steps; ++s) {
        Tape t;
        auto head = variational_head(q, t.constant(specific), false);
        Var ll = gaussian_loglik(t.constant(general), head.mean, head.logvar);
        trace.push_back(t.value(ll)(0, 0));
        t.backward(ops::scale(ll, -1.0));
        opt.step();
    }
    return trace;
}

/// User side (ID vs fused modality) plus item side InfoNCE; rows are the
/// batch's users and items respectively.
inline Var bm_align(Var user_id, Var user_modal, Var item_id, Var item_modal, double tau) {
    return ops::add(infonce(user_id, user_modal, tau), infonce(item_id, item_modal, tau));
}

/// Sum over modalities of InfoNCE between user-side and item-side features
/// of each positive pair; other pairs' items act as negatives.
inline Var ui_align(const std::vector<Var>& user_feats, const std::vector<Var>& item_feats, double tau) {
    if (user_feats.size() != item_feats.size() || user_feats.empty()) {
        throw std::invalid_argument("ui_align: modality lists mismatch");
    }
    std::vector<std::pair<double, Var>> terms;
    for (std::size_t m = 0; m < user_feats.size(); ++m) {
        terms.emplace_back(1.0, infonce(user_feats[m], item_feats[m], tau));
    }
    return ops::linear_combination(terms);
}

inline double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// Mean of -log sigmoid(pos - neg), or of -sigmoid(pos - neg) with
/// `neg_sigmoid`.
inline Var bpr_loss(Var pos, Var neg, BprForm form = BprForm::log_sigmoid) {
    Tape& t = *pos.tape;
    const Mat& p = t.value(pos);
    const Mat& q = t.value(neg);
    ops::require_same_shape(p, q, "bpr_loss");
    const Index n = p.size();
    if (n == 0) {
        throw std::invalid_argument("bpr_loss on an empty batch");
    }
    Mat diff = p - q;
    double value = 0.0;
    Mat dd(diff.rows(), diff.cols());
    for (Index k = 0; k < n; ++k) {
        const double x = diff.data()[k];
        const double sig = ops::sigmoid_scalar(x);
        if (form == BprForm::log_sigmoid) {
            value -= log_sigmoid(x);
            dd.data()[k] = -(1.0 - sig);
        } else {
            value -= sig;
            dd.data()[k] = -sig * (1.0 - sig);
        }
    }
    Mat out(1, 1);
    out(0, 0) = value / static_cast<double>(n);
    return t.record(std::move(out), {pos, neg}, [pos, neg, dd = std::move(dd), n](Tape& t, const Mat& g) {
        Mat d = dd * (g(0, 0) / static_cast<double>(n));
        t.accumulate(pos, d);
        if (t.needs_grad(neg)) {
            t.accumulate(neg, -d);
        }
    });
}

} // namespace losses
} // namespace dgmrec
