#pragma once

#include "dgmrec/numcore/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace dgmrec {

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t coords_checked = 0;
};

/// Compares tape gradients against central differences.
///
/// `build` records the scalar loss on a fresh tape. The relative error of a
/// coordinate is |analytic - numeric| / max(|analytic|, |numeric|, floor);
/// the floor keeps coordinates whose true gradient is ~0 from reporting
/// pure rounding noise as error.
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& build, const std::vector<ParamTensor*>& params,
                                  double h = 1e-3, std::size_t min_coords = 100, std::uint64_t seed = 7,
                                  double floor = 1e-4) {
    if (h <= 0) {
        throw std::invalid_argument("grad_check step must be positive");
    }
    for (auto* p : params) {
        p->zero_grad();
    }
    {
        Tape t;
        Var loss = build(t);
        if (!std::isfinite(t.value(loss)(0, 0))) {
            throw std::domain_error("grad_check: loss is not finite");
        }
        t.backward(loss);
    }
    std::vector<Mat> analytic;
    for (auto* p : params) {
        analytic.push_back(p->grad);
        p->zero_grad();
    }

    auto eval = [&]() {
        Tape t;
        const double v = t.value(build(t))(0, 0);
        if (!std::isfinite(v)) {
            throw std::domain_error("grad_check: loss is not finite");
        }
        return v;
    };

    struct Coord {
        std::size_t param;
        Index index;
    };
    std::vector<Coord> coords;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (Index i = 0; i < params[k]->value.size(); ++i) {
            coords.push_back({k, i});
        }
    }
    std::mt19937_64 rng(seed);
    if (coords.size() > min_coords) {
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(min_coords);
    }

    GradCheckResult res;
    for (const auto& c : coords) {
        double& x = params[c.param]->value.data()[c.index];
        const double orig = x;
        x = orig + h;
        const double fp = eval();
        x = orig - h;
        const double fm = eval();
        x = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[c.param].data()[c.index];
        const double abs_err = std::abs(a - numeric);
        const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
        res.max_rel_error = std::max(res.max_rel_error, rel);
        res.max_abs_error = std::max(res.max_abs_error, abs_err);
        ++res.coords_checked;
    }
    return res;
}

} // namespace dgmrec
