#pragma once

#include "dgmrec/datagen/missing.hpp"
#include "dgmrec/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// Per-user top items with the user's training items removed.
struct RankingResult {
    std::vector<std::vector<std::uint32_t>> ranked;

    std::size_t depth() const {
        std::size_t d = ranked.empty() ? 0 : ranked.front().size();
        for (const auto& r : ranked) {
            d = std::min(d, r.size());
        }
        return d;
    }
};

/// Ranks every item for every user by user_reps · item_reps, highest first,
/// ties toward the lower item id, skipping `exclude[u]` (sorted).
inline RankingResult rank_items(const Mat& user_reps, const Mat& item_reps,
                                const std::vector<std::vector<std::uint32_t>>& exclude, std::size_t depth) {
    const auto n_users = static_cast<std::size_t>(user_reps.rows());
    const auto n_items = static_cast<std::size_t>(item_reps.rows());
    if (exclude.size() != n_users) {
        throw std::invalid_argument("rank_items: exclusion list size mismatch");
    }
    RankingResult res;
    res.ranked.resize(n_users);
    const std::size_t block = 256;
    std::vector<std::pair<double, std::uint32_t>> cand;
    for (std::size_t u0 = 0; u0 < n_users; u0 += block) {
        const std::size_t u1 = std::min(n_users, u0 + block);
        const Mat scores = user_reps.middleRows(static_cast<Index>(u0), static_cast<Index>(u1 - u0)) * item_reps.transpose();
        for (std::size_t u = u0; u < u1; ++u) {
            cand.clear();
            const auto& ex = exclude[u];
            for (std::size_t i = 0; i < n_items; ++i) {
                if (std::binary_search(ex.begin(), ex.end(), static_cast<std::uint32_t>(i))) {
                    continue;
                }
                cand.emplace_back(scores(static_cast<Index>(u - u0), static_cast<Index>(i)), static_cast<std::uint32_t>(i));
            }
            const std::size_t k = std::min(depth, cand.size());
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                              [](const auto& a, const auto& b) {
                                  return a.first > b.first || (a.first == b.first && a.second < b.second);
                              });
            auto& out = res.ranked[u];
            out.reserve(k);
            for (std::size_t r = 0; r < k; ++r) {
                out.push_back(cand[r].second);
            }
        }
    }
    return res;
}

struct MetricPair {
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t users = 0;
};

namespace detail {

inline std::vector<std::vector<std::uint32_t>> group_test(std::size_t num_users, const std::vector<Interaction>& pairs) {
    std::vector<std::vector<std::uint32_t>> out(num_users);
    for (const auto& p : pairs) {
        if (p.user >= num_users) {
            throw std::out_of_range("test pair user out of range");
        }
        out[p.user].push_back(p.item);
    }
    for (auto& v : out) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return out;
}

inline MetricPair evaluate_grouped(const RankingResult& result, const std::vector<std::vector<std::uint32_t>>& relevant,
                                   std::size_t k) {
    MetricPair mp;
    for (std::size_t u = 0; u < relevant.size(); ++u) {
        const auto& rel = relevant[u];
        if (rel.empty()) {
            continue;
        }
        const auto& ranked = result.ranked[u];
        if (ranked.size() < k) {
            throw std::invalid_argument("ranking shorter than K");
        }
        std::size_t hits = 0;
        double dcg = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            if (std::binary_search(rel.begin(), rel.end(), ranked[r])) {
                ++hits;
                dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
            }
        }
        double idcg = 0.0;
        for (std::size_t r = 0; r < std::min(k, rel.size()); ++r) {
            idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        }
        mp.recall += static_cast<double>(hits) / static_cast<double>(rel.size());
        mp.ndcg += dcg / idcg;
        ++mp.users;
    }
    if (mp.users > 0) {
        mp.recall /= static_cast<double>(mp.users);
        mp.ndcg /= static_cast<double>(mp.users);
    }
    return mp;
}

} // namespace detail

/// Mean over users with test items of |top-K ∩ test| / |test|.
inline double recall_at_k(const RankingResult& result, const std::vector<Interaction>& test, std::size_t k) {
    return detail::evaluate_grouped(result, detail::group_test(result.ranked.size(), test), k).recall;
}

/// Mean over users with test items of DCG@K / IDCG@K, binary gains,
/// discount 1/log2(rank + 1).
inline double ndcg_at_k(const RankingResult& result, const std::vector<Interaction>& test, std::size_t k) {
    return detail::evaluate_grouped(result, detail::group_test(result.ranked.size(), test), k).ndcg;
}

inline MetricPair ranking_metrics(const RankingResult& result, const std::vector<Interaction>& test, std::size_t k) {
    return detail::evaluate_grouped(result, detail::group_test(result.ranked.size(), test), k);
}

/// Buckets test pairs by how many modalities their item is missing and
/// computes the metrics within each bucket. Buckets without pairs are left
/// out of the map.
inline std::map<std::size_t, MetricPair> eval_by_missing_level(const RankingResult& result,
                                                               const std::vector<Interaction>& test,
                                                               const MissingPlan& plan, std::size_t k) {
    std::map<std::size_t, std::vector<Interaction>> buckets;
    for (const auto& p : test) {
        buckets[plan.missing_count(p.item)].push_back(p);
    }
    std::map<std::size_t, MetricPair> out;
    for (const auto& [level, pairs] : buckets) {
        out[level] = ranking_metrics(result, pairs, k);
    }
    return out;
}

} // namespace dgmrec
