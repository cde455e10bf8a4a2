#pragma once

#include "dgmrec/datagen/missing.hpp"
#include "dgmrec/model/model.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// One hidden (item, modality) entry and the rank of the item's own true
/// row among all items' true rows, by cosine to the query. nullopt when no
/// query can be formed.
struct RetrievalEntry {
    std::uint32_t item = 0;
    std::uint32_t modality = 0;
    std::size_t missing_count = 0;
    std::optional<std::size_t> rank;
};

struct RetrievalResult {
    std::vector<RetrievalEntry> entries;
};

/// 1-based rank of candidates.row(self): rows with higher cosine, or equal
/// cosine and a lower index, come first.
inline std::size_t retrieval_rank(const Mat& query_row, const Mat& candidates, std::size_t self) {
    Vec norms = candidates.rowwise().norm();
    const double qn = query_row.norm();
    Vec sims = candidates * query_row.transpose();
    for (Index j = 0; j < sims.size(); ++j) {
        sims(j) = (norms(j) > 0 && qn > 0) ? sims(j) / (norms(j) * qn) : 0.0;
    }
    const double own = sims(static_cast<Index>(self));
    std::size_t rank = 1;
    for (Index j = 0; j < sims.size(); ++j) {
        if (sims(j) > own || (sims(j) == own && static_cast<std::size_t>(j) < self)) {
            ++rank;
        }
    }
    return rank;
}

/// Queries are generated raw rows; candidates are the true raw rows.
inline RetrievalResult cross_modal_retrieval_generated(const std::vector<Mat>& generated_raw,
                                                       const std::vector<ModalityTable>& truth,
                                                       const MissingPlan& plan) {
    if (generated_raw.size() != truth.size() || truth.size() != plan.num_modalities) {
        throw std::invalid_argument("retrieval: modality count mismatch");
    }
    RetrievalResult res;
    for (std::size_t i = 0; i < plan.num_items; ++i) {
        for (std::size_t m = 0; m < plan.num_modalities; ++m) {
            if (!plan.missing(i, m)) {
                continue;
            }
            RetrievalEntry e{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(m), plan.missing_count(i), {}};
            e.rank = retrieval_rank(generated_raw[m].row(static_cast<Index>(i)), truth[m].features, i);
            res.entries.push_back(e);
        }
    }
    return res;
}

/// Nearest-neighbor baseline: the query for (i, m) averages the projected
/// features h_m'(x_i,m') of i's available modalities, and candidates are
/// h_m of every item's true row. Undefined when i has nothing available.
inline RetrievalResult cross_modal_retrieval_nn(const DgmrecModel& model, const std::vector<ModalityTable>& truth,
                                                const MissingPlan& plan) {
    if (truth.size() != plan.num_modalities) {
        throw std::invalid_argument("retrieval: modality count mismatch");
    }
    std::vector<Mat> projected;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        projected.push_back(model.projection(m).eval(truth[m].features));
    }
    RetrievalResult res;
    for (std::size_t i = 0; i < plan.num_items; ++i) {
        for (std::size_t m = 0; m < plan.num_modalities; ++m) {
            if (!plan.missing(i, m)) {
                continue;
            }
            RetrievalEntry e{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(m), plan.missing_count(i), {}};
            Mat query = Mat::Zero(1, model.dims().d);
            std::size_t used = 0;
            for (std::size_t o = 0; o < plan.num_modalities; ++o) {
                if (!plan.missing(i, o)) {
                    query += projected[o].row(static_cast<Index>(i));
                    ++used;
                }
            }
            if (used > 0) {
                e.rank = retrieval_rank(query / static_cast<double>(used), projected[m], i);
            }
            res.entries.push_back(e);
        }
    }
    return res;
}

/// Hit@K per missing-count group. A group whose entries all lack a query
/// maps to nullopt; groups with no entries are absent.
inline std::map<std::size_t, std::optional<double>> hit_at_k(const RetrievalResult& r, std::size_t k) {
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> counts;  // hits, defined
    std::map<std::size_t, std::optional<double>> out;
    for (const auto& e : r.entries) {
        auto& c = counts[e.missing_count];
        if (e.rank) {
            ++c.second;
            if (*e.rank <= k) {
                ++c.first;
            }
        }
    }
    for (const auto& [group, c] : counts) {
        if (c.second == 0) {
            out[group] = std::nullopt;
        } else {
            out[group] = static_cast<double>(c.first) / static_cast<double>(c.second);
        }
    }
    return out;
}

} // namespace dgmrec
