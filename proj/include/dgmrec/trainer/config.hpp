#pragma once

#include "dgmrec/losses/losses.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmrec {

enum class Ablation {
    full,
    no_disentangle,
    no_club,
    no_infonce,
    no_generation,
    no_recon,
    no_gen_loss,
    no_alignment,
    no_ui_align,
    no_bm_align,
};

inline const std::vector<std::pair<Ablation, std::string>>& ablation_names() {
    static const std::vector<std::pair<Ablation, std::string>> names = {
        {Ablation::full, "full"},
        {Ablation::no_disentangle, "no_disentangle"},
        {Ablation::no_club, "no_club"},
        {Ablation::no_infonce, "no_infonce"},
        {Ablation::no_generation, "no_generation"},
        {Ablation::no_recon, "no_recon"},
        {Ablation::no_gen_loss, "no_gen_loss"},
        {Ablation::no_alignment, "no_alignment"},
        {Ablation::no_ui_align, "no_ui_align"},
        {Ablation::no_bm_align, "no_bm_align"},
    };
    return names;
}

inline Ablation parse_ablation(const std::string& s) {
    for (const auto& [a, name] : ablation_names()) {
        if (name == s) {
            return a;
        }
    }
    throw std::invalid_argument("unknown ablation flag: " + s);
}

inline std::string to_string(Ablation a) {
    for (const auto& [v, name] : ablation_names()) {
        if (v == a) {
            return name;
        }
    }
    return "unknown";
}

/// Which objective terms and schedules are active.
struct TermMask {
    bool bpr = true;
    bool club = true;
    bool infonce = true;
    bool recon = true;
    bool gen = true;
    bool bm_align = true;
    bool ui_align = true;
    bool generation_schedule = true;
};

inline TermMask term_mask(Ablation a) {
    TermMask t;
    switch (a) {
    case Ablation::full:
        break;
    case Ablation::no_disentangle:
        t.club = t.infonce = false;
        break;
    case Ablation::no_club:
        t.club = false;
        break;
    case Ablation::no_infonce:
        t.infonce = false;
        break;
    case Ablation::no_generation:
        t.generation_schedule = false;
        break;
    case Ablation::no_recon:
        t.recon = false;
        break;
    case Ablation::no_gen_loss:
        t.gen = false;
        break;
    case Ablation::no_alignment:
        t.bm_align = t.ui_align = false;
        break;
    case Ablation::no_ui_align:
        t.ui_align = false;
        break;
    case Ablation::no_bm_align:
        t.bm_align = false;
        break;
    }
    return t;
}

struct TrainConfig {
    Index d = 64;
    std::size_t k = 10;
    int layers = 2;
    double lambda1 = 0.01;
    double lambda2 = 0.01;
    double tau = 0.2;
    double alpha = 0.6;
    double lr = 1e-3;
    std::size_t batch_size = 2048;
    int gen_interval = 5;
    int patience = 30;
    int max_epochs = 1000;
    std::uint64_t seed = 1;
    Ablation ablation = Ablation::full;
    BprForm bpr_form = BprForm::log_sigmoid;
    int variational_steps = 1;
    int lightgcn_layers = 2;
    std::size_t valid_k = 20;
    std::vector<std::size_t> eval_ks = {20, 50};
    bool track_disentangle = false;

    void validate() const {
        if (d <= 0) {
            throw std::invalid_argument("d must be positive");
        }
        if (k == 0) {
            throw std::invalid_argument("k must be positive");
        }
        if (layers < 0 || lightgcn_layers < 0) {
            throw std::invalid_argument("propagation layers must be >= 0");
        }
        if (gen_interval < 1) {
            throw std::invalid_argument("gen_interval must be >= 1");
        }
        if (patience < 1) {
            throw std::invalid_argument("patience must be >= 1");
        }
        if (max_epochs < 1) {
            throw std::invalid_argument("max_epochs must be >= 1");
        }
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw std::invalid_argument("alpha must lie in [0, 1]");
        }
        if (!(tau > 0.0 && tau <= 1.0)) {
            throw std::invalid_argument("tau must lie in (0, 1]");
        }
        for (double l : {lambda1, lambda2}) {
            if (!(l >= 0.0) || !std::isfinite(l)) {
                throw std::invalid_argument("lambda weights must be finite and >= 0");
            }
        }
        if (!(lr > 0.0)) {
            throw std::invalid_argument("lr must be positive");
        }
        if (batch_size == 0) {
            throw std::invalid_argument("batch_size must be positive");
        }
        if (variational_steps < 0) {
            throw std::invalid_argument("variational_steps must be >= 0");
        }
        if (valid_k == 0 || eval_ks.empty()) {
            throw std::invalid_argument("evaluation cutoffs must be positive");
        }
    }
};

/// The tuning grids used for sweeps.
inline const std::vector<double>& lambda_grid() {
    static const std::vector<double> g = {1.0, 0.1, 0.01, 0.001};
    return g;
}

inline const std::vector<double>& alpha_grid() {
    static const std::vector<double> g = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    return g;
}

inline const std::vector<double>& tau_grid() {
    static const std::vector<double> g = {0.2, 0.4, 0.6, 0.8, 1.0};
    return g;
}

} // namespace dgmrec
