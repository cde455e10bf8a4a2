#pragma once

#include "dgmrec/datagen/dataset.hpp"

#include <algorithm>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace dgmrec {

struct Triplet {
    std::uint32_t user = 0;
    std::uint32_t pos = 0;
    std::uint32_t neg = 0;
};

/// One triplet per training pair, in shuffled order, each with a negative
/// drawn uniformly from the items the user has no training pair with.
/// Items flagged new are never drawn: they stay unseen until test time.
inline std::vector<Triplet> sample_triplets(const InteractionDataset& ds,
                                            const std::vector<std::vector<std::uint32_t>>& train_items,
                                            std::mt19937_64& rng) {
    std::vector<Triplet> out;
    out.reserve(ds.train.size());
    auto is_new = [&](std::uint32_t i) { return !ds.new_item.empty() && ds.new_item[i] != 0; };
    const auto n_new = static_cast<std::size_t>(std::count(ds.new_item.begin(), ds.new_item.end(), std::uint8_t{1}));
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(ds.num_items - 1));
    for (const auto& p : ds.train) {
        const auto& seen = train_items[p.user];
        if (seen.size() + n_new >= ds.num_items) {
            throw std::invalid_argument("user " + std::to_string(p.user) + " has no unobserved item to sample");
        }
        std::uint32_t neg = pick(rng);
        while (is_new(neg) || std::binary_search(seen.begin(), seen.end(), neg)) {
            neg = pick(rng);
        }
        out.push_back({p.user, p.item, neg});
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

inline std::vector<std::span<const Triplet>> make_batches(const std::vector<Triplet>& triplets, std::size_t batch_size) {
    std::vector<std::span<const Triplet>> out;
    for (std::size_t b = 0; b < triplets.size(); b += batch_size) {
        out.emplace_back(triplets.data() + b, std::min(batch_size, triplets.size() - b));
    }
    return out;
}

/// Sorted distinct values.
template <class F>
std::vector<Index> unique_ids(std::span<const Triplet> batch, F&& select) {
    std::vector<Index> ids;
    ids.reserve(batch.size() * 2);
    for (const auto& t : batch) {
        select(t, ids);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

} // namespace dgmrec
