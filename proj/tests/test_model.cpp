#include "dgmrec/graph/item_graph.hpp"
#include "dgmrec/model/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dgmrec;

namespace {

Mat random_mat(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat m(r, c);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = g(rng);
    }
    return m;
}

ModelDims toy_dims() {
    ModelDims d;
    d.num_users = 4;
    d.num_items = 6;
    d.d = 5;
    d.modality_dims = {7, 3};
    return d;
}

// u0 {0,1}, u1 {1}, u2 {2,3,4}, u3 {}; item 5 has no users.
InteractionDataset toy_dataset() {
    InteractionDataset ds;
    ds.num_users = 4;
    ds.num_items = 6;
    ds.new_item.assign(6, 0);
    ds.train = {{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 3}, {2, 4}};
    return ds;
}

double leaky(double v) { return v > 0 ? v : 0.2 * v; }

Mat affine_leaky(const Mat& x, const Mlp& net) {
    // Reference chain written out element by element.
    Mat h = x;
    for (std::size_t l = 0; l < net.spec().num_layers(); ++l) {
        const Mat& w = const_cast<Mlp&>(net).weight(l).value;
        const Mat& b = const_cast<Mlp&>(net).bias(l).value;
        Mat next(h.rows(), w.cols());
        for (Index r = 0; r < h.rows(); ++r) {
            for (Index c = 0; c < w.cols(); ++c) {
                double acc = b(0, c);
                for (Index k = 0; k < h.cols(); ++k) {
                    acc += h(r, k) * w(k, c);
                }
                next(r, c) = l + 1 < net.spec().num_layers() ? leaky(acc) : acc;
            }
        }
        h = next;
    }
    return h;
}

} // namespace

TEST(Model, RequiresTwoModalitiesAndPositiveDim) {
    auto d = toy_dims();
    d.modality_dims = {4};
    EXPECT_THROW(DgmrecModel(d, 1), std::invalid_argument);
    d = toy_dims();
    d.d = 0;
    EXPECT_THROW(DgmrecModel(d, 1), std::invalid_argument);
}

TEST(Model, ParameterShapes) {
    DgmrecModel m(toy_dims(), 1);
    EXPECT_EQ(m.id_embedding().value.rows(), 10);
    EXPECT_EQ(m.user_preference(1).value.rows(), 4);
    EXPECT_EQ(m.decoder(0).spec().widths.front(), 10);
    EXPECT_EQ(m.decoder(0).spec().widths.back(), 7);
    EXPECT_EQ(m.general_generator(0).spec().widths.front(), 5);
    EXPECT_EQ(m.variational(0).spec().widths.back(), 10);
    // Variational nets live in their own store.
    EXPECT_EQ(m.params().find("m0.variational.l0.weight"), nullptr);
    EXPECT_NE(m.variational_params().find("m0.variational.l0.weight"), nullptr);
}

TEST(Encode, GeneralEncoderIsSharedAcrossModalities) {
    DgmrecModel m(toy_dims(), 2);
    Tape t;
    const Mat h = random_mat(3, 5, 3);
    Var g0 = m.general_encoder().forward(t, t.constant(h));
    Var g1 = m.general_encoder().forward(t, t.constant(h));
    EXPECT_EQ(t.value(g0), t.value(g1));
    const Mat x0 = random_mat(3, 7, 4);
    auto enc = model_ops::encode(m, 0, t.constant(x0));
    const Mat proj = affine_leaky(x0, m.projection(0));
    EXPECT_TRUE(t.value(enc.general).isApprox(affine_leaky(proj, m.general_encoder()), 1e-12));
    EXPECT_TRUE(t.value(enc.specific).isApprox(affine_leaky(x0, m.specific_encoder(0)), 1e-12));
}

TEST(ItemPreference, AveragesTrainingUsers) {
    auto ds = toy_dataset();
    auto agg = make_item_preference_aggregation(ds);
    Mat pu(4, 2);
    pu << 1, 0, 0, 1, 3, 3, 8, 8;
    Tape t;
    const Mat pi = t.value(model_ops::item_preference(agg, t.constant(pu)));
    EXPECT_EQ(pi.row(0), pu.row(0));
    EXPECT_DOUBLE_EQ(pi(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(pi(1, 1), 0.5);
    EXPECT_EQ(pi.row(3), pu.row(2));
    // No training users: global mean preference.
    EXPECT_TRUE(pi.row(5).isApprox(pu.colwise().mean(), 1e-15));
}

TEST(Gate, SigmoidWeighting) {
    Tape t;
    const Mat e = random_mat(3, 4, 5);
    EXPECT_TRUE(t.value(model_ops::gate(t.constant(e), t.constant(Mat::Zero(3, 4)))).isApprox(0.5 * e, 0.0));
    EXPECT_TRUE(t.value(model_ops::gate(t.constant(e), t.constant(Mat::Constant(3, 4, 60.0)))).isApprox(e, 1e-15));
    const Mat p = random_mat(3, 4, 6);
    const Mat out = t.value(model_ops::gate(t.constant(e), t.constant(p)));
    for (Index i = 0; i < e.size(); ++i) {
        EXPECT_NEAR(out.data()[i], e.data()[i] / (1.0 + std::exp(-p.data()[i])), 1e-15);
    }
}

TEST(UserFeatures, AverageOfInteractedItems) {
    auto agg = make_user_aggregation(toy_dataset());
    Mat e(6, 2);
    e << 2, 0, 0, 2, 1, 1, 4, 4, 7, 1, 9, 9;
    Tape t;
    const Mat f = t.value(model_ops::user_features(agg, t.constant(e)));
    EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(f(0, 1), 1.0);
    EXPECT_EQ(f.row(1), e.row(1));
    EXPECT_TRUE(f.row(2).isApprox((e.row(2) + e.row(3) + e.row(4)) / 3.0, 1e-15));
    EXPECT_EQ(f.row(3), Mat::Zero(1, 2).row(0));
}

TEST(Decode, ZeroWeightsGiveBias) {
    DgmrecModel m(toy_dims(), 3);
    auto& dec = const_cast<Mlp&>(m.decoder(1));
    for (std::size_t l = 0; l < dec.spec().num_layers(); ++l) {
        dec.weight(l).value.setZero();
    }
    dec.bias(1).value << 1, 2, 3;
    Tape t;
    const Mat out = t.value(model_ops::decode(m, 1, t.constant(random_mat(4, 5, 1)), t.constant(random_mat(4, 5, 2))));
    for (Index r = 0; r < 4; ++r) {
        EXPECT_EQ(out.row(r), dec.bias(1).value.row(0));
    }
}

TEST(Decode, MatchesReferenceAndGenerateRaw) {
    DgmrecModel m(toy_dims(), 3);
    const Mat g = random_mat(4, 5, 7);
    const Mat s = random_mat(4, 5, 8);
    Mat cat(4, 10);
    cat << g, s;
    Tape t;
    const Mat out = t.value(model_ops::decode(m, 0, t.constant(g), t.constant(s)));
    EXPECT_TRUE(out.isApprox(affine_leaky(cat, m.decoder(0)), 1e-12));
    EXPECT_TRUE(model_ops::generate_raw(m, 0, g, s).isApprox(out, 1e-14));
}

TEST(Generator, InputUsesOtherModalitiesWithMeanFallback) {
    const Mat g0 = random_mat(4, 2, 1);
    const Mat g1 = random_mat(4, 2, 2);
    const Mat g2 = random_mat(4, 2, 3);
    std::vector<std::vector<std::uint8_t>> avail{{1, 1, 1, 1}, {1, 0, 1, 0}, {0, 0, 1, 1}};
    const Mat in = model_ops::general_generator_input(0, {g0, g1, g2}, avail);
    ASSERT_EQ(in.cols(), 4);
    const Mat mean1 = (g1.row(0) + g1.row(2)) / 2.0;
    const Mat mean2 = (g2.row(2) + g2.row(3)) / 2.0;
    EXPECT_EQ(in.block(0, 0, 1, 2), g1.row(0));
    EXPECT_TRUE(in.block(1, 0, 1, 2).isApprox(mean1, 1e-15));
    EXPECT_TRUE(in.block(1, 2, 1, 2).isApprox(mean2, 1e-15));
    EXPECT_EQ(in.block(3, 2, 1, 2), g2.row(3));
}

TEST(Generator, EqualPreferencesGiveEqualRows) {
    DgmrecModel m(toy_dims(), 4);
    Mat p = random_mat(3, 5, 9);
    p.row(2) = p.row(0);
    Tape t;
    const Mat out = t.value(model_ops::generate_specific(m, 1, t.constant(p)));
    EXPECT_EQ(out.row(0), out.row(2));
    EXPECT_TRUE(out.isApprox(affine_leaky(p, m.specific_generator(1)), 1e-12));
    const Mat gin = random_mat(3, 5, 10);
    EXPECT_TRUE(t.value(model_ops::generate_general(m, 0, t.constant(gin))).isApprox(affine_leaky(gin, m.general_generator(0)), 1e-12));
}

TEST(WriteBack, TouchesOnlyUnavailableRows) {
    ModalityTable tab;
    tab.features = random_mat(4, 3, 1);
    tab.available = {1, 0, 1, 0};
    const Mat before = tab.features;
    const Mat gen = random_mat(4, 3, 2);
    model_ops::write_back(tab, gen);
    EXPECT_EQ(tab.features.row(0), before.row(0));
    EXPECT_EQ(tab.features.row(1), gen.row(1));
    EXPECT_EQ(tab.features.row(2), before.row(2));
    EXPECT_EQ(tab.features.row(3), gen.row(3));
    EXPECT_THROW(model_ops::write_back(tab, Mat::Zero(4, 2)), std::invalid_argument);
}

TEST(Fuse, EqualInputsPassThrough) {
    const Mat v = random_mat(3, 4, 1);
    Tape t;
    const Mat out = t.value(model_ops::fuse({t.constant(v), t.constant(v)}, {t.constant(v), t.constant(v)}));
    EXPECT_TRUE(out.isApprox(v, 1e-15));
}

TEST(Fuse, TwoModalityExpansion) {
    const Mat s1 = random_mat(3, 4, 1), s2 = random_mat(3, 4, 2);
    const Mat g1 = random_mat(3, 4, 3), g2 = random_mat(3, 4, 4);
    Tape t;
    const Mat out = t.value(model_ops::fuse({t.constant(s1), t.constant(s2)}, {t.constant(g1), t.constant(g2)}));
    const Mat gm = (g1 + g2) / 2.0;
    const Mat expect = ((s1 + gm) / 2.0 + (s2 + gm) / 2.0) / 2.0;
    EXPECT_TRUE(out.isApprox(expect, 1e-15));
    EXPECT_THROW(model_ops::fuse({t.constant(s1)}, {t.constant(g1), t.constant(g2)}), std::invalid_argument);
}

TEST(Score, DotProductOfFinalRepresentations) {
    Mat u(2, 3), i(2, 3);
    u << 1, 0, 0, 1, 2, 3;
    i << 0, 1, 0, 4, 5, 6;
    EXPECT_DOUBLE_EQ(score(u, i, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(score(u, i, 1, 1), 32.0);
    EXPECT_THROW(score(u, i, 2, 0), std::out_of_range);
}

TEST(Forward, ZeroModalityFeaturesReduceToIdScores) {
    DgmrecModel m(toy_dims(), 5);
    for (auto* p : m.params().all()) {
        if (p->name.find("embedding.id") == std::string::npos && p->name.find("user_preference") == std::string::npos) {
            p->value.setZero();
        }
    }
    const auto ds = toy_dataset();
    std::vector<ModalityTable> tables(2);
    for (std::size_t k = 0; k < 2; ++k) {
        tables[k].features = random_mat(6, toy_dims().modality_dims[k], 20 + k);
        tables[k].available.assign(6, 1);
    }
    GraphContext ctx;
    ctx.user_agg = make_user_aggregation(ds);
    ctx.item_pref = make_item_preference_aggregation(ds);
    SparseItemGraph g;
    g.num_items = 6;
    g.rows.resize(6);
    for (std::uint32_t r = 0; r < 6; ++r) {
        g.rows[r].push_back({(r + 1) % 6, 1.0, false});
    }
    ctx.item_graphs = {g.to_sparse(), g.to_sparse()};
    Tape t;
    const auto fp = forward(t, m, tables, ctx);
    const Mat& ids = m.id_embedding().value;
    EXPECT_TRUE(t.value(fp.user_final).isApprox(ids.topRows(4), 0.0));
    EXPECT_TRUE(t.value(fp.item_final).isApprox(ids.bottomRows(6), 0.0));
    EXPECT_EQ(t.value(fp.modalities[1].prop_general).rows(), 6);
    tables.pop_back();
    EXPECT_THROW(forward(t, m, tables, ctx), std::invalid_argument);
}
