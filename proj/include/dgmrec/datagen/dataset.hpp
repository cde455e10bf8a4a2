#pragma once

#include "dgmrec/numcore/tensor.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmrec {

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;

    auto operator<=>(const Interaction&) const = default;
};

/// Implicit-feedback pairs split into train/valid/test, plus new-item flags.
struct InteractionDataset {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<Interaction> train;
    std::vector<Interaction> valid;
    std::vector<Interaction> test;
    std::vector<std::uint8_t> new_item;

    std::size_t num_interactions() const { return train.size() + valid.size() + test.size(); }

    bool operator==(const InteractionDataset&) const = default;

    /// Items per user in the training split, each list sorted.
    std::vector<std::vector<std::uint32_t>> train_items_by_user() const {
        return group_by_user(train);
    }

    std::vector<std::vector<std::uint32_t>> train_users_by_item() const {
        std::vector<std::vector<std::uint32_t>> out(num_items);
        for (const auto& p : train) {
            out[p.item].push_back(p.user);
        }
        for (auto& v : out) {
            std::sort(v.begin(), v.end());
        }
        return out;
    }

    std::vector<std::vector<std::uint32_t>> group_by_user(const std::vector<Interaction>& pairs) const {
        std::vector<std::vector<std::uint32_t>> out(num_users);
        for (const auto& p : pairs) {
            out[p.user].push_back(p.item);
        }
        for (auto& v : out) {
            std::sort(v.begin(), v.end());
        }
        return out;
    }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const {
        if (new_item.size() != num_items) {
            throw std::invalid_argument("new_item flags size != num_items");
        }
        std::set<Interaction> seen;
        auto check = [&](const std::vector<Interaction>& split, const char* name, bool allow_new) {
            for (const auto& p : split) {
                if (p.user >= num_users || p.item >= num_items) {
                    throw std::invalid_argument(std::string("id out of range in ") + name);
                }
                if (!seen.insert(p).second) {
                    throw std::invalid_argument(std::string("duplicate pair in ") + name);
                }
                if (!allow_new && new_item[p.item]) {
                    throw std::invalid_argument(std::string("new item appears in ") + name);
                }
            }
        };
        check(train, "train", false);
        check(valid, "valid", false);
        check(test, "test", true);
    }
};

/// One modality's raw item features with an availability mask. Unavailable
/// rows hold a placeholder (or generated values) rather than real data.
struct ModalityTable {
    int modality_id = 0;
    Mat features;
    std::vector<std::uint8_t> available;

    Index dim() const { return features.cols(); }
    Index num_items() const { return features.rows(); }

    std::size_t num_available() const {
        return static_cast<std::size_t>(std::count(available.begin(), available.end(), std::uint8_t{1}));
    }

    /// Column mean over available rows; nullopt when none are available.
    std::optional<Mat> available_mean() const {
        Mat mean = Mat::Zero(1, features.cols());
        std::size_t n = 0;
        for (Index i = 0; i < features.rows(); ++i) {
            if (available[static_cast<std::size_t>(i)]) {
                mean += features.row(i);
                ++n;
            }
        }
        if (n == 0) {
            return std::nullopt;
        }
        return Mat(mean / static_cast<double>(n));
    }

    bool operator==(const ModalityTable& o) const {
        return modality_id == o.modality_id && available == o.available && features.rows() == o.features.rows() &&
               features.cols() == o.features.cols() && features == o.features;
    }
};

/// Split one user's items 8:1:1 with floor rounding, keeping at least one
/// training interaction. `items` must already be in random order.
inline void split_user_items(std::uint32_t user, const std::vector<std::uint32_t>& items, InteractionDataset& ds) {
    const std::size_t n = items.size();
    std::size_t n_test = n / 10;
    std::size_t n_valid = n / 10;
    while (n_test + n_valid >= n && n > 0) {
        if (n_valid > 0) {
            --n_valid;
        } else {
            --n_test;
        }
    }
    std::size_t k = 0;
    for (; k < n_test; ++k) {
        ds.test.push_back({user, items[k]});
    }
    for (; k < n_test + n_valid; ++k) {
        ds.valid.push_back({user, items[k]});
    }
    for (; k < n; ++k) {
        ds.train.push_back({user, items[k]});
    }
}

} // namespace dgmrec
