#pragma once

#include "dgmrec/datagen/synthetic.hpp"
#include "dgmrec/numcore/gradcheck.hpp"
#include "dgmrec/trainer/trainer.hpp"

#include <string>
#include <vector>

namespace dgmrec {

struct TermCheck {
    std::string term;
    GradCheckResult result;
    std::size_t params_touched = 0;
};

/// 10 users, 10 items, 2 modalities, with a levels missing plan.
inline DatasetBundle toy_bundle(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_users = 10;
    spec.num_items = 10;
    spec.num_modalities = 2;
    spec.shared_dim = 3;
    spec.specific_dim = 2;
    spec.raw_dims = {6, 5};
    spec.interactions_per_user = 5;
    spec.seed = seed;
    auto corpus = generate_corpus(spec);
    return make_bundle(corpus.dataset, corpus.modalities, make_missing_plan_levels(spec.num_items, 2, seed + 1),
                       corpus.truth.shared);
}

namespace detail {

/// Parameters that receive a nonzero gradient from `build`.
inline std::vector<ParamTensor*> touched_params(const std::function<Var(Tape&)>& build, ParamStore& store) {
    store.zero_grad();
    {
        Tape t;
        t.backward(build(t));
    }
    std::vector<ParamTensor*> out;
    for (auto* p : store.all()) {
        if (p->grad.size() > 0 && p->grad.cwiseAbs().maxCoeff() > 0.0) {
            out.push_back(p);
        }
    }
    store.zero_grad();
    return out;
}

/// Shifts each hidden unit's bias so that no pre-activation on `input`
/// lies within `margin` of the leaky-ReLU kink. Central differences across
/// a kink measure the jump, not the derivative.
inline void move_off_kinks(Mlp& net, const Mat& input, double margin) {
    Mat h = input;
    for (std::size_t l = 0; l + 1 < net.spec().num_layers(); ++l) {
        auto& w = net.weight(l);
        auto& b = net.bias(l);
        Mat pre = h * w.value;
        for (Index c = 0; c < pre.cols(); ++c) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const double lo = (pre.col(c).array() + b.value(0, c)).abs().minCoeff();
                if (lo >= margin) {
                    break;
                }
                b.value(0, c) += margin * (attempt % 2 == 0 ? 1.5 : -3.0);
            }
        }
        pre.rowwise() += b.value.row(0);
        h = pre.unaryExpr([s = net.spec().leaky_slope](double v) { return v > 0 ? v : s * v; });
    }
}

} // namespace detail

/// Central-difference checks of every objective term, each isolated on the
/// full toy model, plus the weighted total and the variational fitting
/// objective.
inline std::vector<TermCheck> check_loss_gradients(std::uint64_t seed = 3, double h = 1e-3, std::size_t coords = 100) {
    const DatasetBundle bundle = toy_bundle(seed);
    TrainConfig cfg;
    cfg.d = 8;
    cfg.k = 3;
    cfg.tau = 0.5;
    cfg.lambda1 = 0.1;
    cfg.lambda2 = 0.1;
    cfg.seed = seed;

    std::mt19937_64 rng(seed);
    const auto triplets = sample_triplets(bundle.dataset, bundle.dataset.train_items_by_user(), rng);

    std::vector<std::pair<std::string, TermMask>> cases;
    auto only = [](auto setter) {
        TermMask m{false, false, false, false, false, false, false, false};
        setter(m);
        return m;
    };
    cases.emplace_back("club", only([](TermMask& m) { m.club = true; }));
    cases.emplace_back("infonce", only([](TermMask& m) { m.infonce = true; }));
    cases.emplace_back("recon", only([](TermMask& m) { m.recon = true; }));
    cases.emplace_back("gen", only([](TermMask& m) { m.gen = true; }));
    cases.emplace_back("bm_align", only([](TermMask& m) { m.bm_align = true; }));
    cases.emplace_back("ui_align", only([](TermMask& m) { m.ui_align = true; }));
    cases.emplace_back("bpr", only([](TermMask& m) { m.bpr = true; }));
    cases.emplace_back("total", TermMask{});

    std::vector<TermCheck> out;
    for (const auto& [name, mask] : cases) {
        DgmrecRecommender rec(cfg, bundle);
        rec.set_terms(mask);
        rec.pin_detached_inputs(true);
        auto build = [&](Tape& t) { return rec.batch_objective(t, triplets, false).first; };
        auto params = detail::touched_params(build, rec.params());
        TermCheck tc;
        tc.term = name;
        tc.params_touched = params.size();
        tc.result = grad_check(build, params, h, coords, seed);
        out.push_back(tc);
    }

    // Variational fit objective: gradient reaches q only.
    {
        DgmrecRecommender rec(cfg, bundle);
        Tape t0;
        const auto fp = forward(t0, rec.model(), rec.tables(), rec.context());
        const Mat g = t0.value(fp.modalities[0].prop_general);
        const Mat s = t0.value(fp.modalities[0].prop_specific);
        Mlp& q = rec.model().variational(0);
        detail::move_off_kinks(q, s, 10.0 * h * std::max(1.0, s.cwiseAbs().maxCoeff()));
        auto build = [&](Tape& t) {
            auto head = losses::variational_head(q, t.constant(s), false);
            return ops::scale(losses::gaussian_loglik(t.constant(g), head.mean, head.logvar), -1.0);
        };
        TermCheck tc;
        tc.term = "variational_fit";
        tc.params_touched = q.params().size();
        tc.result = grad_check(build, q.params(), h, coords, seed);
        out.push_back(tc);
    }
    return out;
}

} // namespace dgmrec
