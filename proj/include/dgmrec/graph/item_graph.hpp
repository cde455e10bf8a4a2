#pragma once

#include "dgmrec/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dgmrec {

/// One incoming edge of row i: propagation reads `neighbor` into i.
struct GraphEdge {
    std::uint32_t neighbor = 0;
    double weight = 0.0;
    bool refined = false;  // carries weight from a generated-feature graph

    bool operator==(const GraphEdge&) const = default;
};

/// Item-item adjacency stored by rows, each row sorted by neighbor id.
struct SparseItemGraph {
    std::size_t num_items = 0;
    std::vector<std::vector<GraphEdge>> rows;
    std::vector<std::uint8_t> fallback_rows;  // zero-norm rows given random neighbors

    bool operator==(const SparseItemGraph&) const = default;

    std::size_t num_edges() const {
        std::size_t n = 0;
        for (const auto& r : rows) {
            n += r.size();
        }
        return n;
    }

    std::shared_ptr<const SpMat> to_sparse() const {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(num_edges());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (const auto& e : rows[i]) {
                trips.emplace_back(static_cast<Index>(i), static_cast<Index>(e.neighbor), e.weight);
            }
        }
        auto s = std::make_shared<SpMat>(static_cast<Index>(num_items), static_cast<Index>(num_items));
        s->setFromTriplets(trips.begin(), trips.end());
        return s;
    }
};

struct KnnOptions {
    std::size_t k = 10;
    /// Items allowed as neighbors (empty = all).
    std::vector<std::uint8_t> sources;
    /// Rows to build (empty = all); other rows stay empty.
    std::vector<std::uint8_t> targets;
    std::uint64_t seed = 0;
};

/// Top-k cosine neighbors of every target row among eligible sources,
/// self excluded, ties broken toward the lower id. Edge weight is the
/// cosine similarity clipped at zero; a row whose k weights are all zero
/// keeps its neighbors with weight 1 each. A target row with zero norm gets
/// k uniformly random sources with weight 1. Both cases are flagged in
/// fallback_rows.
inline SparseItemGraph build_knn_graph(const Mat& x, const KnnOptions& opt) {
    const auto n = static_cast<std::size_t>(x.rows());
    auto is_source = [&](std::size_t j) { return opt.sources.empty() || opt.sources[j] != 0; };
    auto is_target = [&](std::size_t i) { return opt.targets.empty() || opt.targets[i] != 0; };
    if (!opt.sources.empty() && opt.sources.size() != n) {
        throw std::invalid_argument("source mask size mismatch");
    }
    if (!opt.targets.empty() && opt.targets.size() != n) {
        throw std::invalid_argument("target mask size mismatch");
    }
    if (!x.allFinite()) {
        throw std::invalid_argument("knn graph input has non-finite values");
    }

    Vec norms = x.rowwise().norm();
    Mat unit = x;
    for (Index i = 0; i < x.rows(); ++i) {
        if (norms(i) > 0) {
            unit.row(i) /= norms(i);
        }
    }

    std::vector<std::uint32_t> candidates;
    for (std::size_t j = 0; j < n; ++j) {
        if (is_source(j)) {
            candidates.push_back(static_cast<std::uint32_t>(j));
        }
    }

    SparseItemGraph g;
    g.num_items = n;
    g.rows.resize(n);
    g.fallback_rows.assign(n, 0);

    // Row blocks keep the similarity matrix bounded in memory.
    Mat cand(static_cast<Index>(candidates.size()), x.cols());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        cand.row(static_cast<Index>(c)) = unit.row(candidates[c]);
    }
    std::vector<std::size_t> target_list;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_target(i)) {
            target_list.push_back(i);
        }
    }
    const std::size_t block = 256;
    std::vector<std::pair<double, std::uint32_t>> scored;
    for (std::size_t b0 = 0; b0 < target_list.size(); b0 += block) {
        const std::size_t b1 = std::min(target_list.size(), b0 + block);
        Mat q(static_cast<Index>(b1 - b0), x.cols());
        for (std::size_t r = b0; r < b1; ++r) {
            q.row(static_cast<Index>(r - b0)) = unit.row(static_cast<Index>(target_list[r]));
        }
        const Mat sims = q * cand.transpose();
        for (std::size_t r = b0; r < b1; ++r) {
            const std::size_t i = target_list[r];
            scored.clear();
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (candidates[c] != i) {
                    scored.emplace_back(sims(static_cast<Index>(r - b0), static_cast<Index>(c)), candidates[c]);
                }
            }
            if (scored.size() < opt.k) {
                throw std::invalid_argument("fewer eligible neighbors than k");
            }
            auto& row = g.rows[i];
            if (norms(static_cast<Index>(i)) == 0.0) {
                std::mt19937_64 rng(opt.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
                std::shuffle(scored.begin(), scored.end(), rng);
                for (std::size_t k = 0; k < opt.k; ++k) {
                    row.push_back({scored[k].second, 1.0, false});
                }
                g.fallback_rows[i] = 1;
            } else {
                std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(opt.k), scored.end(),
                                  [](const auto& a, const auto& b) {
                                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                                  });
                double total = 0.0;
                for (std::size_t k = 0; k < opt.k; ++k) {
                    const double w = std::max(scored[k].first, 0.0);
                    row.push_back({scored[k].second, w, false});
                    total += w;
                }
                if (!(total > 0.0)) {
                    for (auto& e : row) {
                        e.weight = 1.0;
                    }
                    g.fallback_rows[i] = 1;
                }
            }
            std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.neighbor < b.neighbor; });
        }
    }
    return g;
}

inline SparseItemGraph build_knn_graph(const Mat& x, std::size_t k) {
    KnnOptions opt;
    opt.k = k;
    return build_knn_graph(x, opt);
}

/// Rescales every non-empty row to sum to one. Rows whose total is not
/// positive cannot be normalized.
inline SparseItemGraph normalize(SparseItemGraph g) {
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        auto& row = g.rows[i];
        if (row.empty()) {
            continue;
        }
        double total = 0.0;
        for (const auto& e : row) {
            total += e.weight;
        }
        if (!(total > 0.0)) {
            throw std::domain_error("graph row " + std::to_string(i) + " has non-positive total weight");
        }
        for (auto& e : row) {
            e.weight /= total;
        }
    }
    return g;
}

/// Returns S^L E (layer-L output only).
inline Mat propagate(const SparseItemGraph& g, const Mat& e, int layers) {
    if (static_cast<std::size_t>(e.rows()) != g.num_items) {
        throw std::invalid_argument("propagate: row count does not match graph");
    }
    if (layers < 0) {
        throw std::invalid_argument("propagate: negative layer count");
    }
    Mat cur = e;
    for (int l = 0; l < layers; ++l) {
        Mat next = Mat::Zero(e.rows(), e.cols());
        for (std::size_t i = 0; i < g.rows.size(); ++i) {
            for (const auto& edge : g.rows[i]) {
                next.row(static_cast<Index>(i)) += edge.weight * cur.row(edge.neighbor);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

/// Mixes rows of `missing` items: alpha * old + (1 - alpha) * new over the
/// union of supports, then renormalizes. Other rows are copied untouched.
/// Edges contributed by `fresh` are marked refined.
inline SparseItemGraph refine(const SparseItemGraph& current, const SparseItemGraph& fresh, double alpha,
                              const std::vector<std::uint8_t>& missing) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("refine: alpha must lie in [0, 1]");
    }
    if (current.num_items != fresh.num_items || missing.size() != current.num_items) {
        throw std::invalid_argument("refine: size mismatch");
    }
    SparseItemGraph out = current;
    if (alpha == 1.0) {
        return out;
    }
    for (std::size_t i = 0; i < current.num_items; ++i) {
        if (!missing[i] || fresh.rows[i].empty()) {
            continue;
        }
        std::vector<GraphEdge> merged;
        const auto& a = current.rows[i];
        const auto& b = fresh.rows[i];
        std::size_t p = 0, q = 0;
        while (p < a.size() || q < b.size()) {
            if (q == b.size() || (p < a.size() && a[p].neighbor < b[q].neighbor)) {
                merged.push_back({a[p].neighbor, alpha * a[p].weight, a[p].refined});
                ++p;
            } else if (p == a.size() || b[q].neighbor < a[p].neighbor) {
                merged.push_back({b[q].neighbor, (1.0 - alpha) * b[q].weight, true});
                ++q;
            } else {
                merged.push_back({a[p].neighbor, alpha * a[p].weight + (1.0 - alpha) * b[q].weight, true});
                ++p;
                ++q;
            }
        }
        std::erase_if(merged, [](const GraphEdge& e) { return e.weight == 0.0; });
        double total = 0.0;
        for (const auto& e : merged) {
            total += e.weight;
        }
        if (!(total > 0.0)) {
            throw std::domain_error("refine produced a row with non-positive total weight");
        }
        for (auto& e : merged) {
            e.weight /= total;
        }
        out.rows[i] = std::move(merged);
    }
    return out;
}

/// Debug dump: `src<TAB>dst<TAB>weight` per edge, where src is the
/// neighbor whose features flow into dst.
inline void write_graph(const SparseItemGraph& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path);
    }
    os.precision(17);
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        for (const auto& e : g.rows[i]) {
            os << e.neighbor << '\t' << i << '\t' << e.weight << (e.refined ? "\tr" : "") << '\n';
        }
    }
}

inline SparseItemGraph read_graph(const std::string& path, std::size_t num_items) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    SparseItemGraph g;
    g.num_items = num_items;
    g.rows.resize(num_items);
    g.fallback_rows.assign(num_items, 0);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::size_t src = 0, dst = 0;
        double w = 0;
        std::string flag;
        if (!(ls >> src >> dst >> w) || src >= num_items || dst >= num_items) {
            throw std::runtime_error("bad graph line: " + line);
        }
        ls >> flag;
        g.rows[dst].push_back({static_cast<std::uint32_t>(src), w, flag == "r"});
    }
    for (auto& row : g.rows) {
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.neighbor < b.neighbor; });
    }
    return g;
}

} // namespace dgmrec
