#pragma once

#include "dgmrec/datagen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// Parameters of the planted-latent corpus. Each item has a shared latent
/// seen by every modality and one private latent per modality.
struct SyntheticSpec {
    std::size_t num_users = 2000;
    std::size_t num_items = 1000;
    std::size_t num_modalities = 2;
    std::size_t shared_dim = 8;
    std::size_t specific_dim = 4;
    std::vector<std::size_t> raw_dims = {64, 32};
    std::size_t interactions_per_user = 20;
    double noise = 0.1;
    double affinity_scale = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_users == 0 || num_items == 0 || num_modalities == 0 || interactions_per_user == 0) {
            throw std::invalid_argument("synthetic spec counts must be positive");
        }
        if (shared_dim == 0) {
            throw std::invalid_argument("shared latent dimension must be positive");
        }
        if (raw_dims.size() != num_modalities) {
            throw std::invalid_argument("raw_dims must list one width per modality");
        }
        for (auto d : raw_dims) {
            if (d == 0) {
                throw std::invalid_argument("raw feature widths must be positive");
            }
        }
        if (!(noise >= 0.0) || !std::isfinite(noise)) {
            throw std::invalid_argument("noise scale must be >= 0");
        }
        if (interactions_per_user > num_items) {
            throw std::invalid_argument("interactions per user exceeds number of items");
        }
    }
};

struct GroundTruth {
    Mat shared;                 // |I| x shared_dim
    std::vector<Mat> specific;  // per modality, |I| x specific_dim
    Mat user;                   // |U| x shared_dim
    std::vector<Mat> mixing;    // per modality, d_m x (shared_dim + specific_dim)
};

struct Corpus {
    InteractionDataset dataset;
    std::vector<ModalityTable> modalities;  // complete: every row available
    GroundTruth truth;
};

namespace detail {

inline Mat gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Mat m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = stddev * dist(rng);
    }
    return m;
}

} // namespace detail

/// Samples a corpus deterministically from `spec.seed`.
///
/// Feature row m of item i is A_m (z_i ++ s_im) + noise. Each user draws
/// `interactions_per_user` distinct items without replacement from
/// softmax(affinity_scale * w_u . z_i) via Gumbel top-k.
inline Corpus generate_corpus(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const auto n_items = static_cast<Index>(spec.num_items);
    const auto n_users = static_cast<Index>(spec.num_users);
    const auto zd = static_cast<Index>(spec.shared_dim);
    const auto sd = static_cast<Index>(spec.specific_dim);

    Corpus c;
    c.truth.shared = detail::gaussian(n_items, zd, 1.0, rng);
    for (std::size_t m = 0; m < spec.num_modalities; ++m) {
        c.truth.specific.push_back(detail::gaussian(n_items, sd, 1.0, rng));
    }
    c.truth.user = detail::gaussian(n_users, zd, 1.0, rng);

    for (std::size_t m = 0; m < spec.num_modalities; ++m) {
        const auto dm = static_cast<Index>(spec.raw_dims[m]);
        Mat a = detail::gaussian(dm, zd + sd, 1.0 / std::sqrt(static_cast<double>(zd + sd)), rng);
        Mat latent(n_items, zd + sd);
        latent.leftCols(zd) = c.truth.shared;
        if (sd > 0) {
            latent.rightCols(sd) = c.truth.specific[m];
        }
        ModalityTable t;
        t.modality_id = static_cast<int>(m);
        t.features = latent * a.transpose();
        if (spec.noise > 0) {
            t.features += detail::gaussian(n_items, dm, spec.noise, rng);
        }
        t.available.assign(spec.num_items, 1);
        c.truth.mixing.push_back(std::move(a));
        c.modalities.push_back(std::move(t));
    }

    auto& ds = c.dataset;
    ds.num_users = spec.num_users;
    ds.num_items = spec.num_items;
    ds.new_item.assign(spec.num_items, 0);

    const Mat logits = spec.affinity_scale * (c.truth.user * c.truth.shared.transpose());
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    std::vector<std::pair<double, std::uint32_t>> keys(spec.num_items);
    std::vector<std::uint32_t> chosen;
    for (Index u = 0; u < n_users; ++u) {
        for (Index i = 0; i < n_items; ++i) {
            const double gumbel = -std::log(-std::log(unif(rng)));
            keys[static_cast<std::size_t>(i)] = {logits(u, i) + gumbel, static_cast<std::uint32_t>(i)};
        }
        const auto n = spec.interactions_per_user;
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        chosen.clear();
        for (std::size_t k = 0; k < n; ++k) {
            chosen.push_back(keys[k].second);
        }
        std::shuffle(chosen.begin(), chosen.end(), rng);
        split_user_items(static_cast<std::uint32_t>(u), chosen, ds);
    }
    return c;
}

} // namespace dgmrec
