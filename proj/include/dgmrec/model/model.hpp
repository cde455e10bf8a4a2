#pragma once

#include "dgmrec/datagen/dataset.hpp"
#include "dgmrec/numcore/autograd.hpp"
#include "dgmrec/numcore/mlp.hpp"

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace dgmrec {

struct ModelDims {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    Index d = 64;
    std::vector<Index> modality_dims;
    double leaky_slope = 0.2;

    std::size_t num_modalities() const { return modality_dims.size(); }
};

/// Every learnable component. Encoders (h_m, f_g, f_s_m) are single affine
/// layers; decoders, generators and the variational nets have one hidden
/// layer of width d. The variational nets live in their own store because
/// they are optimized separately.
class DgmrecModel {
public:
    DgmrecModel(ModelDims dims, std::uint64_t seed) : dims_(std::move(dims)) {
        if (dims_.d <= 0) {
            throw std::invalid_argument("embedding dimension must be positive");
        }
        if (dims_.num_modalities() < 2) {
            throw std::invalid_argument("at least two modalities are required");
        }
        std::mt19937_64 rng(seed);
        const Index d = dims_.d;
        const auto n_mod = dims_.num_modalities();
        const auto slope = dims_.leaky_slope;
        const auto n_ent = static_cast<Index>(dims_.num_users + dims_.num_items);
        id_embedding_ = &params_.add("embedding.id", xavier_uniform(n_ent, d, rng));
        general_ = Mlp(params_, "general_encoder", {{d, d}, slope}, rng);
        for (std::size_t m = 0; m < n_mod; ++m) {
            const auto tag = "m" + std::to_string(m);
            const Index dm = dims_.modality_dims[m];
            user_pref_.push_back(&params_.add(tag + ".user_preference",
                                              xavier_uniform(static_cast<Index>(dims_.num_users), d, rng)));
            projection_.emplace_back(params_, tag + ".projection", MlpSpec{{dm, d}, slope}, rng);
            specific_.emplace_back(params_, tag + ".specific_encoder", MlpSpec{{dm, d}, slope}, rng);
            decoder_.emplace_back(params_, tag + ".decoder", MlpSpec{{2 * d, d, dm}, slope}, rng);
            gen_general_.emplace_back(params_, tag + ".general_generator",
                                      MlpSpec{{static_cast<Index>(n_mod - 1) * d, d, d}, slope}, rng);
            gen_specific_.emplace_back(params_, tag + ".specific_generator", MlpSpec{{d, d, d}, slope}, rng);
            variational_.emplace_back(variational_params_, tag + ".variational", MlpSpec{{d, d, 2 * d}, slope}, rng);
        }
    }

    DgmrecModel(const DgmrecModel&) = delete;
    DgmrecModel& operator=(const DgmrecModel&) = delete;

    const ModelDims& dims() const { return dims_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    ParamStore& variational_params() { return variational_params_; }
    const ParamStore& variational_params() const { return variational_params_; }

    ParamTensor& id_embedding() const { return *id_embedding_; }
    ParamTensor& user_preference(std::size_t m) const { return *user_pref_.at(m); }
    const Mlp& projection(std::size_t m) const { return projection_.at(m); }
    const Mlp& general_encoder() const { return general_; }
    const Mlp& specific_encoder(std::size_t m) const { return specific_.at(m); }
    const Mlp& decoder(std::size_t m) const { return decoder_.at(m); }
    const Mlp& general_generator(std::size_t m) const { return gen_general_.at(m); }
    const Mlp& specific_generator(std::size_t m) const { return gen_specific_.at(m); }
    const Mlp& variational(std::size_t m) const { return variational_.at(m); }
    Mlp& variational(std::size_t m) { return variational_.at(m); }

private:
    ModelDims dims_;
    ParamStore params_;
    ParamStore variational_params_;
    ParamTensor* id_embedding_ = nullptr;
    std::vector<ParamTensor*> user_pref_;
    Mlp general_;
    std::vector<Mlp> projection_;
    std::vector<Mlp> specific_;
    std::vector<Mlp> decoder_;
    std::vector<Mlp> gen_general_;
    std::vector<Mlp> gen_specific_;
    std::vector<Mlp> variational_;
};

/// Fixed sparse operators used by the forward pass.
struct GraphContext {
    std::shared_ptr<const SpMat> user_agg;   // |U| x |I|, row u averages u's training items
    std::shared_ptr<const SpMat> item_pref;  // |I| x |U|, row i averages i's training users
    std::vector<std::shared_ptr<const SpMat>> item_graphs;  // per modality, row-normalized
    int layers = 2;
};

/// Row u holds 1/|N_u| at each training item of u. Users without training
/// items get an empty row.
inline std::shared_ptr<const SpMat> make_user_aggregation(const InteractionDataset& ds) {
    const auto items = ds.train_items_by_user();
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t u = 0; u < items.size(); ++u) {
        for (auto i : items[u]) {
            trips.emplace_back(static_cast<Index>(u), static_cast<Index>(i), 1.0 / static_cast<double>(items[u].size()));
        }
    }
    auto s = std::make_shared<SpMat>(static_cast<Index>(ds.num_users), static_cast<Index>(ds.num_items));
    s->setFromTriplets(trips.begin(), trips.end());
    return s;
}

/// Row i holds 1/|N_i| at each training user of i; items with no training
/// users average over all users (the global mean preference).
inline std::shared_ptr<const SpMat> make_item_preference_aggregation(const InteractionDataset& ds) {
    const auto users = ds.train_users_by_item();
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i].empty()) {
            for (std::size_t u = 0; u < ds.num_users; ++u) {
                trips.emplace_back(static_cast<Index>(i), static_cast<Index>(u), 1.0 / static_cast<double>(ds.num_users));
            }
            continue;
        }
        for (auto u : users[i]) {
            trips.emplace_back(static_cast<Index>(i), static_cast<Index>(u), 1.0 / static_cast<double>(users[i].size()));
        }
    }
    auto s = std::make_shared<SpMat>(static_cast<Index>(ds.num_items), static_cast<Index>(ds.num_users));
    s->setFromTriplets(trips.begin(), trips.end());
    return s;
}

namespace model_ops {

struct Encoding {
    Var general;
    Var specific;
};

/// E_g = f_g(h_m(X_m)), E_s = f_s_m(X_m).
inline Encoding encode(const DgmrecModel& model, std::size_t m, Var x) {
    Tape& t = *x.tape;
    Var projected = model.projection(m).forward(t, x);
    return {model.general_encoder().forward(t, projected), model.specific_encoder(m).forward(t, x)};
}

inline Var item_preference(std::shared_ptr<const SpMat> item_pref, Var user_pref) {
    return ops::spmm(std::move(item_pref), user_pref);
}

/// E ⊙ sigmoid(P_i).
inline Var gate(Var e, Var item_pref) {
    return ops::hadamard(e, ops::sigmoid(item_pref));
}

inline Var propagate(const std::shared_ptr<const SpMat>& graph, Var e, int layers) {
    for (int l = 0; l < layers; ++l) {
        e = ops::spmm(graph, e);
    }
    return e;
}

inline Var user_features(std::shared_ptr<const SpMat> user_agg, Var item_feats) {
    return ops::spmm(std::move(user_agg), item_feats);
}

/// f_dec_m(general ++ specific).
inline Var decode(const DgmrecModel& model, std::size_t m, Var general, Var specific) {
    return model.decoder(m).forward(*general.tape, ops::concat_cols({general, specific}));
}

/// Concatenates, in ascending modality order, every modality other than
/// `target`: an item's own row when that modality is available, otherwise
/// the column mean over items where it is available.
inline Mat general_generator_input(std::size_t target, const std::vector<Mat>& general,
                                   const std::vector<std::vector<std::uint8_t>>& available) {
    const Index n = general.front().rows();
    const Index d = general.front().cols();
    Mat out(n, static_cast<Index>(general.size() - 1) * d);
    Index c = 0;
    for (std::size_t m = 0; m < general.size(); ++m) {
        if (m == target) {
            continue;
        }
        Mat mean = Mat::Zero(1, d);
        std::size_t k = 0;
        for (Index i = 0; i < n; ++i) {
            if (available[m][static_cast<std::size_t>(i)]) {
                mean += general[m].row(i);
                ++k;
            }
        }
        if (k > 0) {
            mean /= static_cast<double>(k);
        }
        for (Index i = 0; i < n; ++i) {
            out.block(i, c, 1, d) = available[m][static_cast<std::size_t>(i)] ? Mat(general[m].row(i)) : mean;
        }
        c += d;
    }
    return out;
}

inline Var generate_general(const DgmrecModel& model, std::size_t m, Var input) {
    return model.general_generator(m).forward(*input.tape, input);
}

inline Var generate_specific(const DgmrecModel& model, std::size_t m, Var item_pref) {
    return model.specific_generator(m).forward(*item_pref.tape, item_pref);
}

/// X_hat = f_dec_m(gen_general ++ gen_specific), evaluated without a tape.
inline Mat generate_raw(const DgmrecModel& model, std::size_t m, const Mat& gen_general, const Mat& gen_specific) {
    Mat in(gen_general.rows(), gen_general.cols() + gen_specific.cols());
    in << gen_general, gen_specific;
    return model.decoder(m).eval(in);
}

/// Writes generated rows into unavailable rows only.
inline void write_back(ModalityTable& table, const Mat& generated) {
    if (generated.rows() != table.features.rows() || generated.cols() != table.features.cols()) {
        throw std::invalid_argument("write_back: shape mismatch");
    }
    for (Index i = 0; i < generated.rows(); ++i) {
        if (!table.available[static_cast<std::size_t>(i)]) {
            table.features.row(i) = generated.row(i);
        }
    }
}

/// mean_m ( (specific_m + mean_m' general_m') / 2 ).
inline Var fuse(const std::vector<Var>& specific, const std::vector<Var>& general) {
    if (specific.size() != general.size() || specific.empty()) {
        throw std::invalid_argument("fuse: modality lists mismatch");
    }
    Var pooled_general = ops::mean_of(general);
    std::vector<Var> per_modality;
    for (const auto& s : specific) {
        per_modality.push_back(ops::mean_of({s, pooled_general}));
    }
    return ops::mean_of(per_modality);
}

} // namespace model_ops

/// Every intermediate of one full forward pass.
struct ModalityForward {
    Var general;        // encoder outputs
    Var specific;
    Var item_pref;      // P_i,m
    Var prop_general;   // after gating and propagation
    Var prop_specific;
    Var user_general;   // user-side aggregates
    Var user_specific;
};

struct ForwardPass {
    Var user_id;
    Var item_id;
    std::vector<ModalityForward> modalities;
    Var item_fused;  // E_M
    Var user_fused;  // F_M
    Var user_final;  // e_u,id + F_M
    Var item_final;  // e_i,id + E_M
};

inline std::vector<Index> index_range(Index begin, Index end) {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(end - begin));
    for (Index i = begin; i < end; ++i) {
        out.push_back(i);
    }
    return out;
}

inline ForwardPass forward(Tape& t, const DgmrecModel& model, const std::vector<ModalityTable>& tables,
                           const GraphContext& ctx) {
    const auto& dims = model.dims();
    if (tables.size() != dims.num_modalities() || ctx.item_graphs.size() != dims.num_modalities()) {
        throw std::invalid_argument("forward: modality count mismatch");
    }
    ForwardPass fp;
    Var ids = t.param(model.id_embedding());
    const auto nu = static_cast<Index>(dims.num_users);
    const auto ni = static_cast<Index>(dims.num_items);
    fp.user_id = ops::gather_rows(ids, index_range(0, nu));
    fp.item_id = ops::gather_rows(ids, index_range(nu, nu + ni));

    std::vector<Var> gen_items, spec_items, gen_users, spec_users;
    for (std::size_t m = 0; m < tables.size(); ++m) {
        if (tables[m].dim() != dims.modality_dims[m]) {
            throw std::invalid_argument("forward: feature width mismatch for modality " + std::to_string(m));
        }
        ModalityForward mf;
        auto enc = model_ops::encode(model, m, t.constant(tables[m].features));
        mf.general = enc.general;
        mf.specific = enc.specific;
        mf.item_pref = model_ops::item_preference(ctx.item_pref, t.param(model.user_preference(m)));
        mf.prop_general = model_ops::propagate(ctx.item_graphs[m], model_ops::gate(enc.general, mf.item_pref), ctx.layers);
        mf.prop_specific = model_ops::propagate(ctx.item_graphs[m], model_ops::gate(enc.specific, mf.item_pref), ctx.layers);
        mf.user_general = model_ops::user_features(ctx.user_agg, mf.prop_general);
        mf.user_specific = model_ops::user_features(ctx.user_agg, mf.prop_specific);
        gen_items.push_back(mf.prop_general);
        spec_items.push_back(mf.prop_specific);
        gen_users.push_back(mf.user_general);
        spec_users.push_back(mf.user_specific);
        fp.modalities.push_back(mf);
    }
    fp.item_fused = model_ops::fuse(spec_items, gen_items);
    fp.user_fused = model_ops::fuse(spec_users, gen_users);
    fp.user_final = ops::add(fp.user_id, fp.user_fused);
    fp.item_final = ops::add(fp.item_id, fp.item_fused);
    return fp;
}

/// y_ui = (e_u,id + f_u,M) . (e_i,id + e_i,M).
inline double score(const Mat& user_final, const Mat& item_final, std::size_t u, std::size_t i) {
    if (static_cast<Index>(u) >= user_final.rows() || static_cast<Index>(i) >= item_final.rows()) {
        throw std::out_of_range("score: id out of range");
    }
    return user_final.row(static_cast<Index>(u)).dot(item_final.row(static_cast<Index>(i)));
}

} // namespace dgmrec
