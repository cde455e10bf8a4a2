#pragma once

#include "dgmrec/datagen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// Which (item, modality) entries are hidden from the model.
struct MissingPlan {
    enum class Mode { levels, ratio };

    Mode mode = Mode::levels;
    double ratio = 0.0;
    std::size_t num_items = 0;
    std::size_t num_modalities = 0;
    std::vector<std::uint8_t> mask;  // row-major |I| x M, 1 = missing

    static MissingPlan none(std::size_t num_items, std::size_t num_modalities) {
        MissingPlan p;
        p.mode = Mode::ratio;
        p.num_items = num_items;
        p.num_modalities = num_modalities;
        p.mask.assign(num_items * num_modalities, 0);
        return p;
    }

    bool missing(std::size_t item, std::size_t modality) const { return mask[item * num_modalities + modality] != 0; }

    void set_missing(std::size_t item, std::size_t modality) { mask[item * num_modalities + modality] = 1; }

    std::size_t missing_count(std::size_t item) const {
        std::size_t n = 0;
        for (std::size_t m = 0; m < num_modalities; ++m) {
            n += missing(item, m) ? 1 : 0;
        }
        return n;
    }

    std::size_t total_missing() const {
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    }

    std::vector<std::uint8_t> available_mask(std::size_t modality) const {
        std::vector<std::uint8_t> out(num_items);
        for (std::size_t i = 0; i < num_items; ++i) {
            out[i] = missing(i, modality) ? 0 : 1;
        }
        return out;
    }

    /// True when every missing entry of *this is also missing in `other`.
    bool subset_of(const MissingPlan& other) const {
        if (mask.size() != other.mask.size()) {
            return false;
        }
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (mask[k] && !other.mask[k]) {
                return false;
            }
        }
        return true;
    }

    bool operator==(const MissingPlan&) const = default;
};

/// Partitions items into equal groups with 0..M missing modalities; which
/// modalities are missing is drawn uniformly per item. Group sizes differ
/// by at most one.
inline MissingPlan make_missing_plan_levels(std::size_t num_items, std::size_t num_modalities, std::uint64_t seed) {
    if (num_modalities != 2 && num_modalities != 3) {
        throw std::invalid_argument("levels plan supports 2 or 3 modalities");
    }
    std::mt19937_64 rng(seed);
    MissingPlan plan = MissingPlan::none(num_items, num_modalities);
    plan.mode = MissingPlan::Mode::levels;

    std::vector<std::size_t> items(num_items);
    std::iota(items.begin(), items.end(), std::size_t{0});
    std::shuffle(items.begin(), items.end(), rng);

    const std::size_t levels = num_modalities + 1;
    const std::size_t base = num_items / levels;
    const std::size_t extra = num_items % levels;
    std::vector<std::size_t> mods(num_modalities);
    std::size_t pos = 0;
    for (std::size_t level = 0; level < levels; ++level) {
        const std::size_t count = base + (level < extra ? 1 : 0);
        for (std::size_t k = 0; k < count; ++k, ++pos) {
            std::iota(mods.begin(), mods.end(), std::size_t{0});
            std::shuffle(mods.begin(), mods.end(), rng);
            for (std::size_t j = 0; j < level; ++j) {
                plan.set_missing(items[pos], mods[j]);
            }
        }
    }
    return plan;
}

/// Nested plans: one random order over all (item, modality) entries, and
/// the plan at ratio r hides the first round(r * |I| * M) of them.
inline std::vector<MissingPlan> make_missing_plan_ratio(std::size_t num_items, std::size_t num_modalities,
                                                        const std::vector<double>& ratios, std::uint64_t seed) {
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        if (!(ratios[k] >= 0.0 && ratios[k] <= 1.0)) {
            throw std::invalid_argument("missing ratios must lie in [0, 1]");
        }
        if (k > 0 && ratios[k] < ratios[k - 1]) {
            throw std::invalid_argument("missing ratios must be sorted ascending");
        }
    }
    std::mt19937_64 rng(seed);
    const std::size_t total = num_items * num_modalities;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<MissingPlan> out;
    for (double r : ratios) {
        MissingPlan p = MissingPlan::none(num_items, num_modalities);
        p.mode = MissingPlan::Mode::ratio;
        p.ratio = r;
        const auto n = static_cast<std::size_t>(std::llround(r * static_cast<double>(total)));
        for (std::size_t k = 0; k < n; ++k) {
            p.mask[order[k]] = 1;
        }
        out.push_back(std::move(p));
    }
    return out;
}

/// Hides the plan's entries: clears availability and writes the column mean
/// of the remaining rows as placeholder (zeros if nothing is left).
inline void apply_missing_plan(std::vector<ModalityTable>& tables, const MissingPlan& plan) {
    if (tables.size() != plan.num_modalities) {
        throw std::invalid_argument("plan modality count does not match tables");
    }
    for (std::size_t m = 0; m < tables.size(); ++m) {
        auto& t = tables[m];
        if (static_cast<std::size_t>(t.num_items()) != plan.num_items) {
            throw std::invalid_argument("plan item count does not match table");
        }
        for (std::size_t i = 0; i < plan.num_items; ++i) {
            if (plan.missing(i, m)) {
                t.available[i] = 0;
            }
        }
        const Mat mean = t.available_mean().value_or(Mat::Zero(1, t.dim()));
        for (std::size_t i = 0; i < plan.num_items; ++i) {
            if (!t.available[i]) {
                t.features.row(static_cast<Index>(i)) = mean;
            }
        }
    }
}

/// Flags round(fraction * |I|) items (at least one) as new: all their pairs
/// move to test. Users left without training pairs are removed and the
/// remaining users are renumbered densely in original order.
inline InteractionDataset holdout_new_items(const InteractionDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("new-item fraction must lie in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> items(ds.num_items);
    std::iota(items.begin(), items.end(), 0u);
    std::shuffle(items.begin(), items.end(), rng);
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.num_items))));

    InteractionDataset out;
    out.num_items = ds.num_items;
    out.new_item = ds.new_item;
    for (std::size_t k = 0; k < count; ++k) {
        out.new_item[items[k]] = 1;
    }

    std::vector<Interaction> train, valid, test;
    for (const auto& p : ds.train) {
        (out.new_item[p.item] ? test : train).push_back(p);
    }
    for (const auto& p : ds.valid) {
        (out.new_item[p.item] ? test : valid).push_back(p);
    }
    for (const auto& p : ds.test) {
        test.push_back(p);
    }

    std::vector<std::uint8_t> has_train(ds.num_users, 0);
    for (const auto& p : train) {
        has_train[p.user] = 1;
    }
    std::vector<std::int64_t> remap(ds.num_users, -1);
    std::size_t next = 0;
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        if (has_train[u]) {
            remap[u] = static_cast<std::int64_t>(next++);
        }
    }
    if (next == 0) {
        throw std::invalid_argument("new-item holdout removed every user's training history");
    }
    out.num_users = next;
    auto keep = [&](const std::vector<Interaction>& in, std::vector<Interaction>& dst) {
        for (const auto& p : in) {
            if (remap[p.user] >= 0) {
                dst.push_back({static_cast<std::uint32_t>(remap[p.user]), p.item});
            }
        }
    };
    keep(train, out.train);
    keep(valid, out.valid);
    keep(test, out.test);
    return out;
}

enum class ImputeMethod { global_mean, nn_mean };

/// Fills unavailable rows. nn_mean averages the rows of the (up to) ten
/// available items sharing the most training users with the target, ties
/// toward lower ids, and falls back to the global mean when none exist.
inline ModalityTable impute_baseline(const ModalityTable& table, const InteractionDataset& ds, ImputeMethod method,
                                     std::size_t neighbors = 10) {
    const auto global = table.available_mean();
    if (!global) {
        throw std::invalid_argument("cannot impute a modality with no available rows");
    }
    ModalityTable out = table;
    if (method == ImputeMethod::global_mean) {
        for (Index i = 0; i < out.num_items(); ++i) {
            if (!out.available[static_cast<std::size_t>(i)]) {
                out.features.row(i) = *global;
            }
        }
        return out;
    }

    const auto users_of = ds.train_users_by_item();
    const auto items_of = ds.train_items_by_user();
    std::vector<std::uint32_t> counts(ds.num_items, 0);
    std::vector<std::uint32_t> touched;
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        if (table.available[i]) {
            continue;
        }
        touched.clear();
        for (auto u : users_of[i]) {
            for (auto j : items_of[u]) {
                if (j == i || !table.available[j]) {
                    continue;
                }
                if (counts[j]++ == 0) {
                    touched.push_back(j);
                }
            }
        }
        std::sort(touched.begin(), touched.end(), [&](std::uint32_t a, std::uint32_t b) {
            return counts[a] > counts[b] || (counts[a] == counts[b] && a < b);
        });
        const std::size_t take = std::min(neighbors, touched.size());
        if (take == 0) {
            out.features.row(static_cast<Index>(i)) = *global;
        } else {
            Mat acc = Mat::Zero(1, table.dim());
            for (std::size_t k = 0; k < take; ++k) {
                acc += table.features.row(touched[k]);
            }
            out.features.row(static_cast<Index>(i)) = acc / static_cast<double>(take);
        }
        for (auto j : touched) {
            counts[j] = 0;
        }
    }
    return out;
}

} // namespace dgmrec
