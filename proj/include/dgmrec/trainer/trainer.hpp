#pragma once

#include "dgmrec/datagen/io.hpp"
#include "dgmrec/eval/diagnostics.hpp"
#include "dgmrec/eval/metrics.hpp"
#include "dgmrec/graph/item_graph.hpp"
#include "dgmrec/losses/losses.hpp"
#include "dgmrec/model/model.hpp"
#include "dgmrec/trainer/config.hpp"
#include "dgmrec/trainer/sampling.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmrec {

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BaselineKind { mf_bpr, lightgcn, dgmrec_nn_inject };

inline BaselineKind parse_baseline(const std::string& s) {
    if (s == "mf_bpr") {
        return BaselineKind::mf_bpr;
    }
    if (s == "lightgcn") {
        return BaselineKind::lightgcn;
    }
    if (s == "dgmrec_nn_inject") {
        return BaselineKind::dgmrec_nn_inject;
    }
    throw std::invalid_argument("unknown baseline kind: " + s);
}

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;  // mean over batches
    double valid_recall = 0.0;
    double valid_ndcg = 0.0;
    bool generated = false;
    std::optional<DisentangleRecord> diagnostics;
};

struct TrainReport {
    std::string model;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_valid_recall = -1.0;
    double wall_seconds = 0.0;
    std::string stop_reason;
    std::map<std::size_t, MetricPair> test;  // by K

    /// Identical apart from wall time.
    bool same_trajectory(const TrainReport& o) const {
        if (epochs.size() != o.epochs.size() || best_epoch != o.best_epoch || test.size() != o.test.size()) {
            return false;
        }
        for (std::size_t e = 0; e < epochs.size(); ++e) {
            const auto& a = epochs[e];
            const auto& b = o.epochs[e];
            if (a.loss.total != b.loss.total || a.valid_recall != b.valid_recall || a.valid_ndcg != b.valid_ndcg) {
                return false;
            }
        }
        for (const auto& [k, m] : test) {
            auto it = o.test.find(k);
            if (it == o.test.end() || it->second.recall != m.recall || it->second.ndcg != m.ndcg) {
                return false;
            }
        }
        return true;
    }
};

/// Everything that is restored when rolling back to the best epoch.
struct ModelSnapshot {
    std::vector<Mat> params;
    std::vector<Mat> variational;
    std::vector<ModalityTable> tables;
    std::vector<SparseItemGraph> graphs;
};

/// A model the generic loop can train, evaluate and roll back.
class Recommender {
public:
    virtual ~Recommender() = default;

    virtual std::string kind() const = 0;
    virtual LossBreakdown train_batch(std::span<const Triplet> batch) = 0;
    /// Called after every epoch's batches; returns true when the scheduled
    /// generation and refinement ran.
    virtual bool end_epoch(int /*epoch*/) { return false; }
    /// Final user and item representations used for scoring.
    virtual std::pair<Mat, Mat> representations() const = 0;
    virtual std::optional<DisentangleRecord> diagnostics(int /*epoch*/, const std::optional<Mat>& /*latent*/) const {
        return std::nullopt;
    }
    virtual ParamStore& params() = 0;
    virtual ModelSnapshot snapshot() const = 0;
    virtual void restore(const ModelSnapshot& s) = 0;
};

namespace detail {

inline void require_finite(const LossBreakdown& l, const std::string& where) {
    if (!l.finite()) {
        std::ostringstream os;
        os << "non-finite loss in " << where << ": bpr=" << l.bpr << " recon=" << l.recon << " gen=" << l.gen
           << " club=" << l.club << " infonce=" << l.infonce << " bm=" << l.bm_align << " ui=" << l.ui_align;
        throw DivergenceError(os.str());
    }
}

inline std::vector<Index> pick_rows(const std::vector<Index>& ids, const std::vector<std::uint8_t>& mask) {
    std::vector<Index> out;
    for (auto i : ids) {
        if (mask[static_cast<std::size_t>(i)]) {
            out.push_back(i);
        }
    }
    return out;
}

inline Mat gather(const Mat& m, const std::vector<Index>& rows) {
    Mat out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Index>(r)) = m.row(rows[r]);
    }
    return out;
}

} // namespace detail

/// The full multimodal model with disentanglement, generation and
/// alignment. With `inject_nn`, missing rows are filled once by
/// neighbor-mean imputation and the generation schedule is off.
class DgmrecRecommender : public Recommender {
public:
    DgmrecRecommender(const TrainConfig& cfg, const DatasetBundle& bundle, bool inject_nn = false)
        : cfg_(cfg),
          terms_(term_mask(cfg.ablation)),
          inject_nn_(inject_nn),
          ds_(bundle.dataset),
          tables_(bundle.modalities),
          model_(make_dims(cfg, bundle), cfg.seed) {
        cfg_.validate();
        if (inject_nn_) {
            terms_.generation_schedule = false;
            for (auto& t : tables_) {
                if (t.num_available() > 0) {
                    t = impute_baseline(t, ds_, ImputeMethod::nn_mean);
                }
            }
        }
        for (const auto& t : tables_) {
            available_.push_back(t.available);
            missing_.emplace_back(t.available.size());
            for (std::size_t i = 0; i < t.available.size(); ++i) {
                missing_.back()[i] = t.available[i] ? 0 : 1;
            }
        }
        for (std::size_t m = 0; m < tables_.size(); ++m) {
            KnnOptions opt;
            opt.k = cfg_.k;
            opt.seed = cfg_.seed + m;
            graphs_.push_back(normalize(build_knn_graph(tables_[m].features, opt)));
        }
        ctx_.user_agg = make_user_aggregation(ds_);
        ctx_.item_pref = make_item_preference_aggregation(ds_);
        ctx_.layers = cfg_.layers;
        sync_graphs();
        opt_ = Adam(model_.params().all(), AdamConfig{cfg_.lr});
        for (std::size_t m = 0; m < tables_.size(); ++m) {
            var_opt_.emplace_back(model_.variational(m).params(), AdamConfig{cfg_.lr});
        }
    }

    std::string kind() const override { return inject_nn_ ? "dgmrec_nn_inject" : "dgmrec"; }

    const DgmrecModel& model() const { return model_; }
    DgmrecModel& model() { return model_; }
    const std::vector<ModalityTable>& tables() const { return tables_; }
    const std::vector<SparseItemGraph>& graphs() const { return graphs_; }
    const GraphContext& context() const { return ctx_; }
    const TermMask& terms() const { return terms_; }
    void set_terms(const TermMask& t) { terms_ = t; }

    /// Keeps the generation loss's constant inputs fixed at the values seen
    /// on the next objective evaluation. Finite-difference checks need this:
    /// otherwise perturbing an encoder weight moves the targets that the
    /// analytic gradient treats as constants.
    void pin_detached_inputs(bool on) {
        pin_detached_ = on;
        pinned_.reset();
    }

    /// Builds every active loss term for one batch on `t`. The variational
    /// nets are refit on this batch first when `fit_q` is set.
    std::pair<Var, LossBreakdown> batch_objective(Tape& t, std::span<const Triplet> batch, bool fit_q) {
        const ForwardPass fp = forward(t, model_, tables_, ctx_);
        const std::size_t n_mod = tables_.size();

        std::vector<Index> users, pos, neg;
        for (const auto& tr : batch) {
            users.push_back(tr.user);
            pos.push_back(tr.pos);
            neg.push_back(tr.neg);
        }
        const auto items = unique_ids(batch, [](const Triplet& tr, std::vector<Index>& v) {
            v.push_back(tr.pos);
            v.push_back(tr.neg);
        });
        const auto batch_users = unique_ids(batch, [](const Triplet& tr, std::vector<Index>& v) { v.push_back(tr.user); });

        LossBreakdown parts;
        std::vector<std::pair<double, Var>> terms;

        if (terms_.bpr) {
            Var u = ops::gather_rows(fp.user_final, users);
            Var s_pos = ops::rowwise_dot(u, ops::gather_rows(fp.item_final, pos));
            Var s_neg = ops::rowwise_dot(u, ops::gather_rows(fp.item_final, neg));
            Var bpr = losses::bpr_loss(s_pos, s_neg, cfg_.bpr_form);
            parts.bpr = t.value(bpr)(0, 0);
            terms.emplace_back(1.0, bpr);
        }

        // Values the generation loss treats as constants.
        if (terms_.gen && (!pin_detached_ || !pinned_)) {
            DetachedInputs d;
            for (const auto& mf : fp.modalities) {
                d.general.push_back(t.value(mf.prop_general));
                d.specific.push_back(t.value(mf.prop_specific));
                d.item_pref.push_back(t.value(mf.item_pref));
            }
            pinned_ = std::move(d);
        }

        for (std::size_t m = 0; m < n_mod; ++m) {
            const auto& mf = fp.modalities[m];
            const auto avail_rows = detail::pick_rows(items, available_[m]);
            if (terms_.recon && !avail_rows.empty()) {
                Var xbar = model_ops::decode(model_, m, ops::gather_rows(mf.prop_general, avail_rows),
                                             ops::gather_rows(mf.prop_specific, avail_rows));
                Var l = losses::mse(xbar, detail::gather(tables_[m].features, avail_rows));
                parts.recon += t.value(l)(0, 0);
                terms.emplace_back(1.0, l);
            }
            if (terms_.gen && !avail_rows.empty()) {
                const auto& d = *pinned_;
                const Mat input = detail::gather(model_ops::general_generator_input(m, d.general, available_), avail_rows);
                Var gg = model_ops::generate_general(model_, m, t.constant(input));
                Var gs = model_ops::generate_specific(model_, m, t.constant(detail::gather(d.item_pref[m], avail_rows)));
                Var lg = losses::mse(gg, detail::gather(d.general[m], avail_rows));
                Var ls = losses::mse(gs, detail::gather(d.specific[m], avail_rows));
                Var l = ops::add(lg, ls);
                parts.gen += t.value(l)(0, 0);
                terms.emplace_back(1.0, l);
            }
            if (terms_.club) {
                Var g = ops::gather_rows(mf.prop_general, items);
                Var s = ops::gather_rows(mf.prop_specific, items);
                if (fit_q && cfg_.variational_steps > 0) {
                    losses::fit_variational(model_.variational(m), var_opt_[m], t.value(g), t.value(s),
                                            cfg_.variational_steps);
                }
                Var l = losses::club_loss(g, s, model_.variational(m));
                parts.club += t.value(l)(0, 0);
                terms.emplace_back(cfg_.lambda1, l);
            }
        }

        if (terms_.infonce) {
            for (std::size_t m = 0; m < n_mod; ++m) {
                for (std::size_t o = m + 1; o < n_mod; ++o) {
                    Var l = losses::infonce(ops::gather_rows(fp.modalities[m].prop_general, items),
                                            ops::gather_rows(fp.modalities[o].prop_general, items), cfg_.tau);
                    parts.infonce += t.value(l)(0, 0);
                    terms.emplace_back(cfg_.lambda1, l);
                }
            }
        }

        if (terms_.bm_align) {
            Var l = losses::bm_align(ops::gather_rows(fp.user_id, batch_users), ops::gather_rows(fp.user_fused, batch_users),
                                     ops::gather_rows(fp.item_id, items), ops::gather_rows(fp.item_fused, items), cfg_.tau);
            parts.bm_align = t.value(l)(0, 0);
            terms.emplace_back(cfg_.lambda2, l);
        }

        if (terms_.ui_align) {
            std::vector<Var> uf, itf;
            for (const auto& mf : fp.modalities) {
                uf.push_back(ops::gather_rows(ops::mean_of({mf.user_general, mf.user_specific}), users));
                itf.push_back(ops::gather_rows(ops::mean_of({mf.prop_general, mf.prop_specific}), pos));
            }
            Var l = losses::ui_align(uf, itf, cfg_.tau);
            parts.ui_align = t.value(l)(0, 0);
            terms.emplace_back(cfg_.lambda2, l);
        }

        parts = total_loss(parts, cfg_.lambda1, cfg_.lambda2);
        return {ops::linear_combination(terms), parts};
    }

    LossBreakdown train_batch(std::span<const Triplet> batch) override {
        Tape t;
        auto [loss, parts] = batch_objective(t, batch, true);
        detail::require_finite(parts, kind());
        t.backward(loss);
        opt_.step();
        return parts;
    }

    bool end_epoch(int epoch) override {
        if (!terms_.generation_schedule || epoch % cfg_.gen_interval != 0) {
            return false;
        }
        generate_and_refine();
        return true;
    }

    /// Generates every missing (item, modality) row, writes it back, and
    /// refines the missing items' graph rows with edges from available
    /// items under the generated features.
    void generate_and_refine() {
        std::vector<Mat> before;
        for (std::size_t m = 0; m < tables_.size(); ++m) {
            before.push_back(detail::gather(tables_[m].features, losses::mask_rows(available_[m])));
        }
        const auto generated = generate_missing();
        for (std::size_t m = 0; m < tables_.size(); ++m) {
            model_ops::write_back(tables_[m], generated[m]);
            if (detail::gather(tables_[m].features, losses::mask_rows(available_[m])) != before[m]) {
                throw std::logic_error("generation modified an available row");
            }
            if (tables_[m].num_available() == 0 || tables_[m].num_available() == tables_[m].available.size()) {
                continue;
            }
            KnnOptions opt;
            opt.k = std::min(cfg_.k, tables_[m].num_available());
            opt.sources = available_[m];
            opt.targets = missing_[m];
            opt.seed = cfg_.seed + m;
            auto fresh = normalize(build_knn_graph(tables_[m].features, opt));
            graphs_[m] = refine(graphs_[m], fresh, cfg_.alpha, missing_[m]);
        }
        sync_graphs();
    }

    /// Raw features the generators produce for every item (all rows), per
    /// modality, from the current state.
    std::vector<Mat> generate_missing() const {
        Tape t;
        const ForwardPass fp = forward(t, model_, tables_, ctx_);
        std::vector<Mat> prop_general;
        for (const auto& mf : fp.modalities) {
            prop_general.push_back(t.value(mf.prop_general));
        }
        std::vector<Mat> out;
        for (std::size_t m = 0; m < tables_.size(); ++m) {
            const Mat gg = model_.general_generator(m).eval(model_ops::general_generator_input(m, prop_general, available_));
            const Mat gs = model_.specific_generator(m).eval(t.value(fp.modalities[m].item_pref));
            out.push_back(model_ops::generate_raw(model_, m, gg, gs));
        }
        return out;
    }

    std::pair<Mat, Mat> representations() const override {
        Tape t;
        const ForwardPass fp = forward(t, model_, tables_, ctx_);
        return {t.value(fp.user_final), t.value(fp.item_final)};
    }

    std::optional<DisentangleRecord> diagnostics(int epoch, const std::optional<Mat>& latent) const override {
        Tape t;
        const ForwardPass fp = forward(t, model_, tables_, ctx_);
        std::vector<Mat> g, s;
        for (const auto& mf : fp.modalities) {
            g.push_back(t.value(mf.prop_general));
            s.push_back(t.value(mf.prop_specific));
        }
        return disentangle_diagnostics(epoch, g, s, latent);
    }

    ParamStore& params() override { return model_.params(); }

    ModelSnapshot snapshot() const override {
        return {model_.params().snapshot(), model_.variational_params().snapshot(), tables_, graphs_};
    }

    void restore(const ModelSnapshot& s) override {
        model_.params().restore(s.params);
        model_.variational_params().restore(s.variational);
        tables_ = s.tables;
        graphs_ = s.graphs;
        sync_graphs();
    }

private:
    static ModelDims make_dims(const TrainConfig& cfg, const DatasetBundle& b) {
        ModelDims dims;
        dims.num_users = b.dataset.num_users;
        dims.num_items = b.dataset.num_items;
        dims.d = cfg.d;
        for (const auto& t : b.modalities) {
            dims.modality_dims.push_back(t.dim());
        }
        return dims;
    }

    void sync_graphs() {
        ctx_.item_graphs.clear();
        for (const auto& g : graphs_) {
            ctx_.item_graphs.push_back(g.to_sparse());
        }
    }

    struct DetachedInputs {
        std::vector<Mat> general;
        std::vector<Mat> specific;
        std::vector<Mat> item_pref;
    };

    TrainConfig cfg_;
    TermMask terms_;
    bool inject_nn_;
    bool pin_detached_ = false;
    std::optional<DetachedInputs> pinned_;
    InteractionDataset ds_;
    std::vector<ModalityTable> tables_;
    std::vector<std::vector<std::uint8_t>> available_;
    std::vector<std::vector<std::uint8_t>> missing_;
    std::vector<SparseItemGraph> graphs_;
    DgmrecModel model_;
    GraphContext ctx_;
    Adam opt_;
    std::vector<Adam> var_opt_;
};

/// Symmetrically normalized user-item adjacency over training pairs, users
/// first then items.
inline std::shared_ptr<const SpMat> bipartite_adjacency(const InteractionDataset& ds) {
    std::vector<double> deg(ds.num_users + ds.num_items, 0.0);
    for (const auto& p : ds.train) {
        deg[p.user] += 1.0;
        deg[ds.num_users + p.item] += 1.0;
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& p : ds.train) {
        const auto u = static_cast<Index>(p.user);
        const auto i = static_cast<Index>(ds.num_users + p.item);
        const double w = 1.0 / std::sqrt(deg[static_cast<std::size_t>(u)] * deg[static_cast<std::size_t>(i)]);
        trips.emplace_back(u, i, w);
        trips.emplace_back(i, u, w);
    }
    const auto n = static_cast<Index>(ds.num_users + ds.num_items);
    auto a = std::make_shared<SpMat>(n, n);
    a->setFromTriplets(trips.begin(), trips.end());
    return a;
}

/// ID-embedding collaborative filtering with BPR. With zero layers this is
/// matrix factorization; otherwise embeddings are averaged over the
/// propagation layers of the bipartite graph.
class CfRecommender : public Recommender {
public:
    CfRecommender(const TrainConfig& cfg, const InteractionDataset& ds, int layers)
        : cfg_(cfg), layers_(layers), num_users_(ds.num_users), num_items_(ds.num_items) {
        cfg_.validate();
        if (layers_ < 0) {
            throw std::invalid_argument("layers must be >= 0");
        }
        std::mt19937_64 rng(cfg_.seed);
        emb_ = &store_.add("embedding.id", xavier_uniform(static_cast<Index>(num_users_ + num_items_), cfg_.d, rng));
        adj_ = bipartite_adjacency(ds);
        opt_ = Adam(store_.all(), AdamConfig{cfg_.lr});
    }

    std::string kind() const override { return layers_ == 0 ? "mf_bpr" : "lightgcn"; }

    Var embed(Tape& t) const {
        Var e = t.param(*emb_);
        if (layers_ == 0) {
            return e;
        }
        std::vector<Var> per_layer{e};
        Var cur = e;
        for (int l = 0; l < layers_; ++l) {
            cur = ops::spmm(adj_, cur);
            per_layer.push_back(cur);
        }
        return ops::mean_of(per_layer);
    }

    LossBreakdown train_batch(std::span<const Triplet> batch) override {
        Tape t;
        Var e = embed(t);
        std::vector<Index> users, pos, neg;
        const auto nu = static_cast<Index>(num_users_);
        for (const auto& tr : batch) {
            users.push_back(tr.user);
            pos.push_back(nu + tr.pos);
            neg.push_back(nu + tr.neg);
        }
        Var u = ops::gather_rows(e, users);
        Var l = losses::bpr_loss(ops::rowwise_dot(u, ops::gather_rows(e, pos)), ops::rowwise_dot(u, ops::gather_rows(e, neg)),
                                 cfg_.bpr_form);
        LossBreakdown parts;
        parts.bpr = t.value(l)(0, 0);
        parts = total_loss(parts, cfg_.lambda1, cfg_.lambda2);
        detail::require_finite(parts, kind());
        t.backward(l);
        opt_.step();
        return parts;
    }

    std::pair<Mat, Mat> representations() const override {
        Tape t;
        const Mat& e = t.value(embed(t));
        const auto nu = static_cast<Index>(num_users_);
        return {e.topRows(nu), e.bottomRows(static_cast<Index>(num_items_))};
    }

    ParamStore& params() override { return store_; }

    ModelSnapshot snapshot() const override { return {store_.snapshot(), {}, {}, {}}; }

    void restore(const ModelSnapshot& s) override { store_.restore(s.params); }

private:
    TrainConfig cfg_;
    int layers_;
    std::size_t num_users_;
    std::size_t num_items_;
    ParamStore store_;
    ParamTensor* emb_ = nullptr;
    std::shared_ptr<const SpMat> adj_;
    Adam opt_;
};

/// Ranks for every user with training items excluded, deep enough for the
/// largest cutoff.
inline RankingResult rank_all(const Recommender& model, const InteractionDataset& ds, std::size_t depth) {
    const auto [users, items] = model.representations();
    return rank_items(users, items, ds.train_items_by_user(), depth);
}

/// The generic epoch loop: sample, train, run the epoch hook, validate,
/// keep the best snapshot, stop on patience, then score the test split
/// with the best state restored.
inline TrainReport run_training(Recommender& model, const DatasetBundle& bundle, const TrainConfig& cfg) {
    cfg.validate();
    bundle.dataset.validate();
    const auto start = std::chrono::steady_clock::now();
    TrainReport report;
    report.model = model.kind();
    const auto& ds = bundle.dataset;
    const auto train_items = ds.train_items_by_user();
    std::size_t depth = cfg.valid_k;
    for (auto k : cfg.eval_ks) {
        depth = std::max(depth, k);
    }
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 17);
    std::optional<ModelSnapshot> best;
    int since_best = 0;
    report.stop_reason = "max_epochs";
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        const auto triplets = sample_triplets(ds, train_items, rng);
        const auto batches = make_batches(triplets, cfg.batch_size);
        for (const auto& b : batches) {
            rec.loss += model.train_batch(b);
        }
        if (!batches.empty()) {
            rec.loss = rec.loss.scaled(1.0 / static_cast<double>(batches.size()));
        }
        rec.generated = model.end_epoch(epoch);
        const auto ranking = rank_all(model, ds, depth);
        const auto valid = ranking_metrics(ranking, ds.valid, cfg.valid_k);
        rec.valid_recall = valid.recall;
        rec.valid_ndcg = valid.ndcg;
        if (cfg.track_disentangle) {
            rec.diagnostics = model.diagnostics(epoch, bundle.shared_latent);
        }
        report.epochs.push_back(rec);
        if (rec.valid_recall > report.best_valid_recall) {
            report.best_valid_recall = rec.valid_recall;
            report.best_epoch = epoch;
            best = model.snapshot();
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            report.stop_reason = "patience";
            break;
        }
    }
    if (best) {
        model.restore(*best);
    }
    const auto ranking = rank_all(model, ds, depth);
    for (auto k : cfg.eval_ks) {
        report.test[k] = ranking_metrics(ranking, ds.test, k);
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

struct TrainResult {
    std::unique_ptr<Recommender> model;
    TrainReport report;
};

inline TrainResult train(const TrainConfig& cfg, const DatasetBundle& bundle) {
    cfg.validate();
    TrainResult r;
    r.model = std::make_unique<DgmrecRecommender>(cfg, bundle);
    r.report = run_training(*r.model, bundle, cfg);
    return r;
}

inline TrainReport run_ablation(TrainConfig cfg, const DatasetBundle& bundle, const std::string& flag) {
    cfg.ablation = parse_ablation(flag);
    return train(cfg, bundle).report;
}

inline TrainResult train_baseline(BaselineKind kind, const TrainConfig& cfg, const DatasetBundle& bundle) {
    cfg.validate();
    TrainResult r;
    switch (kind) {
    case BaselineKind::mf_bpr:
        r.model = std::make_unique<CfRecommender>(cfg, bundle.dataset, 0);
        break;
    case BaselineKind::lightgcn:
        r.model = std::make_unique<CfRecommender>(cfg, bundle.dataset, cfg.lightgcn_layers);
        break;
    case BaselineKind::dgmrec_nn_inject:
        r.model = std::make_unique<DgmrecRecommender>(cfg, bundle, true);
        break;
    }
    r.report = run_training(*r.model, bundle, cfg);
    return r;
}

} // namespace dgmrec
