#include "dgmrec/datagen/dataset.hpp"
#include "dgmrec/datagen/io.hpp"
#include "dgmrec/datagen/missing.hpp"
#include "dgmrec/datagen/synthetic.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <filesystem>
#include <set>

using namespace dgmrec;

namespace {

SyntheticSpec small_spec(std::uint64_t seed = 4) {
    SyntheticSpec s;
    s.num_users = 60;
    s.num_items = 40;
    s.raw_dims = {10, 6};
    s.interactions_per_user = 10;
    s.seed = seed;
    return s;
}

ModalityTable table_from(const Mat& x, std::vector<std::uint8_t> avail) {
    ModalityTable t;
    t.features = x;
    t.available = std::move(avail);
    return t;
}

} // namespace

TEST(Synthetic, DefaultCorpusHasFortyThousandInteractions) {
    SyntheticSpec s;
    const auto c = generate_corpus(s);
    EXPECT_EQ(c.dataset.num_interactions(), 40000u);
    EXPECT_DOUBLE_EQ(static_cast<double>(c.dataset.num_interactions()) / (2000.0 * 1000.0), 0.02);
    ASSERT_EQ(c.modalities.size(), 2u);
    EXPECT_EQ(c.modalities[0].dim(), 64);
    EXPECT_EQ(c.modalities[1].dim(), 32);
    c.dataset.validate();
}

TEST(Synthetic, SameSeedIsBitIdentical) {
    const auto a = generate_corpus(small_spec());
    const auto b = generate_corpus(small_spec());
    EXPECT_EQ(a.dataset, b.dataset);
    EXPECT_EQ(a.modalities, b.modalities);
    EXPECT_EQ(a.truth.shared, b.truth.shared);
    const auto c = generate_corpus(small_spec(5));
    EXPECT_FALSE(a.modalities == c.modalities);
}

TEST(Synthetic, NoiselessNoSpecificModalitiesShareOneSubspace) {
    auto s = small_spec();
    s.noise = 0.0;
    s.specific_dim = 0;
    const auto c = generate_corpus(s);
    // Both tables are exact linear images of the shared latent.
    for (const auto& t : c.modalities) {
        Eigen::MatrixXd z = c.truth.shared;
        Eigen::MatrixXd coef = z.colPivHouseholderQr().solve(Eigen::MatrixXd(t.features));
        EXPECT_LT((z * coef - t.features).norm(), 1e-9 * t.features.norm());
    }
}

TEST(Synthetic, SplitIsEightOneOnePerUser) {
    const auto c = generate_corpus(small_spec());
    EXPECT_EQ(c.dataset.train.size(), 60u * 8);
    EXPECT_EQ(c.dataset.valid.size(), 60u);
    EXPECT_EQ(c.dataset.test.size(), 60u);
}

TEST(Synthetic, RejectsInvalidSpecs) {
    auto s = small_spec();
    s.raw_dims = {10};
    EXPECT_THROW(generate_corpus(s), std::invalid_argument);
    s = small_spec();
    s.interactions_per_user = 41;
    EXPECT_THROW(generate_corpus(s), std::invalid_argument);
    s = small_spec();
    s.noise = -1;
    EXPECT_THROW(generate_corpus(s), std::invalid_argument);
}

TEST(Split, KeepsOneTrainingPairForShortHistories) {
    InteractionDataset ds;
    split_user_items(0, {5}, ds);
    EXPECT_EQ(ds.train.size(), 1u);
    split_user_items(1, {1, 2}, ds);
    EXPECT_EQ(ds.train.size(), 3u);
    EXPECT_TRUE(ds.valid.empty());
    EXPECT_TRUE(ds.test.empty());
}

TEST(MissingLevels, NineHundredItemsSplitIntoThirds) {
    const auto p = make_missing_plan_levels(900, 2, 1);
    std::array<int, 3> count{};
    for (std::size_t i = 0; i < 900; ++i) {
        ++count[p.missing_count(i)];
    }
    EXPECT_EQ(count[0], 300);
    EXPECT_EQ(count[1], 300);
    EXPECT_EQ(count[2], 300);
}

TEST(MissingLevels, EightItemsThreeModalities) {
    const auto p = make_missing_plan_levels(8, 3, 2);
    std::array<int, 4> count{};
    for (std::size_t i = 0; i < 8; ++i) {
        ++count[p.missing_count(i)];
    }
    EXPECT_EQ(count, (std::array<int, 4>{2, 2, 2, 2}));
}

TEST(MissingLevels, BalancedWithinOneAndDeterministic) {
    for (std::size_t n : {1u, 7u, 100u, 1001u}) {
        for (std::size_t m : {2u, 3u}) {
            const auto p = make_missing_plan_levels(n, m, n + m);
            std::vector<int> count(m + 1);
            for (std::size_t i = 0; i < n; ++i) {
                ++count[p.missing_count(i)];
            }
            const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
            EXPECT_LE(*hi - *lo, 1) << n << " items, " << m << " modalities";
            EXPECT_EQ(p, make_missing_plan_levels(n, m, n + m));
        }
    }
    EXPECT_THROW(make_missing_plan_levels(10, 4, 1), std::invalid_argument);
}

TEST(MissingRatio, PlansAreNestedAndSized) {
    const std::vector<double> ratios{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    const auto plans = make_missing_plan_ratio(101, 2, ratios, 3);
    ASSERT_EQ(plans.size(), ratios.size());
    EXPECT_EQ(plans.front().total_missing(), 0u);
    EXPECT_EQ(plans.back().total_missing(), 202u);
    for (std::size_t k = 0; k < plans.size(); ++k) {
        EXPECT_EQ(plans[k].total_missing(), static_cast<std::size_t>(std::llround(ratios[k] * 202)));
        if (k > 0) {
            EXPECT_TRUE(plans[k - 1].subset_of(plans[k]));
        }
    }
    EXPECT_THROW(make_missing_plan_ratio(10, 2, {0.5, 0.2}, 1), std::invalid_argument);
    EXPECT_THROW(make_missing_plan_ratio(10, 2, {1.5}, 1), std::invalid_argument);
}

TEST(ApplyPlan, HidesRowsBehindColumnMean) {
    Mat x(3, 2);
    x << 0, 0, 2, 2, 9, 9;
    std::vector<ModalityTable> tables{table_from(x, {1, 1, 1}), table_from(x, {1, 1, 1})};
    auto plan = MissingPlan::none(3, 2);
    plan.set_missing(2, 0);
    apply_missing_plan(tables, plan);
    EXPECT_EQ(tables[0].available, (std::vector<std::uint8_t>{1, 1, 0}));
    EXPECT_DOUBLE_EQ(tables[0].features(2, 0), 1.0);
    EXPECT_EQ(tables[1].features, x);
}

TEST(Holdout, TwentyPercentOfThousandItems) {
    SyntheticSpec s;
    s.num_users = 300;
    const auto c = generate_corpus(s);
    const auto ds = holdout_new_items(c.dataset, 0.2, 8);
    EXPECT_EQ(std::count(ds.new_item.begin(), ds.new_item.end(), std::uint8_t{1}), 200);
    for (const auto* split : {&ds.train, &ds.valid}) {
        for (const auto& p : *split) {
            EXPECT_FALSE(ds.new_item[p.item]);
        }
    }
    ds.validate();
    EXPECT_EQ(ds.num_interactions(), c.dataset.num_interactions());
}

TEST(Holdout, SingleFlaggedItemMovesOnlyItsPairs) {
    auto c = generate_corpus(small_spec());
    const auto ds = holdout_new_items(c.dataset, 0.001, 2);
    ASSERT_EQ(std::count(ds.new_item.begin(), ds.new_item.end(), std::uint8_t{1}), 1);
    const auto item = static_cast<std::uint32_t>(std::find(ds.new_item.begin(), ds.new_item.end(), 1) - ds.new_item.begin());
    std::size_t moved = 0;
    for (const auto* split : {&c.dataset.train, &c.dataset.valid}) {
        for (const auto& p : *split) {
            moved += p.item == item ? 1 : 0;
        }
    }
    ASSERT_EQ(ds.num_users, c.dataset.num_users);
    EXPECT_EQ(ds.train.size() + ds.valid.size() + moved, c.dataset.train.size() + c.dataset.valid.size());
    EXPECT_EQ(ds.test.size(), c.dataset.test.size() + moved);
    EXPECT_THROW(holdout_new_items(c.dataset, 0.0, 1), std::invalid_argument);
}

TEST(Validate, RejectsNewItemsInTraining) {
    auto c = generate_corpus(small_spec());
    auto ds = c.dataset;
    ds.new_item[ds.train.front().item] = 1;
    EXPECT_THROW(ds.validate(), std::invalid_argument);
    ds = c.dataset;
    ds.train.push_back(ds.train.front());
    EXPECT_THROW(ds.validate(), std::invalid_argument);
}

TEST(Impute, GlobalMeanFillsMissingRow) {
    Mat x(3, 2);
    x << 0, 0, 2, 2, 7, 7;
    InteractionDataset ds;
    ds.num_users = 1;
    ds.num_items = 3;
    ds.new_item.assign(3, 0);
    const auto out = impute_baseline(table_from(x, {1, 1, 0}), ds, ImputeMethod::global_mean);
    EXPECT_DOUBLE_EQ(out.features(2, 0), 1.0);
    EXPECT_DOUBLE_EQ(out.features(2, 1), 1.0);
    EXPECT_EQ(out.available, (std::vector<std::uint8_t>{1, 1, 0}));
}

// 5 items, 3 users: u0 {0,1,2}, u1 {0,1,3}, u2 {2,4}. Item 0 is missing.
// Co-counts with item 0: item 1 -> 2, item 2 -> 1, item 3 -> 1.
TEST(Impute, NeighborMeanMatchesHandCount) {
    InteractionDataset ds;
    ds.num_users = 3;
    ds.num_items = 5;
    ds.new_item.assign(5, 0);
    ds.train = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 3}, {2, 2}, {2, 4}};
    Mat x(5, 1);
    x << 100, 1, 2, 4, 8;
    const auto nn = impute_baseline(table_from(x, {0, 1, 1, 1, 1}), ds, ImputeMethod::nn_mean);
    EXPECT_DOUBLE_EQ(nn.features(0, 0), (1.0 + 2.0 + 4.0) / 3.0);
    // Keeping only the single strongest neighbor.
    const auto top1 = impute_baseline(table_from(x, {0, 1, 1, 1, 1}), ds, ImputeMethod::nn_mean, 1);
    EXPECT_DOUBLE_EQ(top1.features(0, 0), 1.0);
    // Ties at count 1 break toward lower ids.
    const auto top2 = impute_baseline(table_from(x, {0, 1, 1, 1, 1}), ds, ImputeMethod::nn_mean, 2);
    EXPECT_DOUBLE_EQ(top2.features(0, 0), 1.5);
}

TEST(Impute, FallsBackToGlobalMeanWhenNeighborsAreMissing) {
    InteractionDataset ds;
    ds.num_users = 2;
    ds.num_items = 4;
    ds.new_item.assign(4, 0);
    ds.train = {{0, 0}, {0, 1}, {1, 2}, {1, 3}};
    Mat x(4, 1);
    x << 50, 60, 2, 4;
    const auto out = impute_baseline(table_from(x, {0, 0, 1, 1}), ds, ImputeMethod::nn_mean);
    EXPECT_DOUBLE_EQ(out.features(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(out.features(1, 0), 3.0);
}

TEST(Impute, IsIdempotent) {
    auto c = generate_corpus(small_spec());
    auto tables = c.modalities;
    apply_missing_plan(tables, make_missing_plan_levels(40, 2, 3));
    for (auto method : {ImputeMethod::global_mean, ImputeMethod::nn_mean}) {
        for (const auto& t : tables) {
            const auto once = impute_baseline(t, c.dataset, method);
            const auto twice = impute_baseline(once, c.dataset, method);
            EXPECT_EQ(once, twice);
            for (Index i = 0; i < t.num_items(); ++i) {
                if (t.available[static_cast<std::size_t>(i)]) {
                    EXPECT_EQ(once.features.row(i), t.features.row(i));
                }
            }
        }
    }
}

TEST(Impute, NoAvailableRowsThrows) {
    InteractionDataset ds;
    ds.num_items = 2;
    ds.new_item.assign(2, 0);
    EXPECT_THROW(impute_baseline(table_from(Mat::Zero(2, 1), {0, 0}), ds, ImputeMethod::global_mean),
                 std::invalid_argument);
}

TEST(BundleIo, RoundTrips) {
    auto c = generate_corpus(small_spec());
    auto ds = holdout_new_items(c.dataset, 0.1, 5);
    const auto b = make_bundle(ds, c.modalities, make_missing_plan_levels(40, 2, 6), c.truth.shared);
    const auto dir = std::filesystem::temp_directory_path() / "dgmrec_bundle_test";
    std::filesystem::remove_all(dir);
    write_bundle(b, dir);
    const auto back = read_bundle(dir);
    EXPECT_EQ(back.dataset, b.dataset);
    EXPECT_EQ(back.plan, b.plan);
    ASSERT_EQ(back.modalities.size(), 2u);
    for (std::size_t m = 0; m < 2; ++m) {
        // Feature files store single precision.
        EXPECT_EQ(back.modalities[m].available, b.modalities[m].available);
        EXPECT_EQ(back.modalities[m].features, b.modalities[m].features.cast<float>().cast<double>());
        EXPECT_EQ(back.truth[m].features, b.truth[m].features.cast<float>().cast<double>());
    }
    EXPECT_EQ(*back.shared_latent, b.shared_latent->cast<float>().cast<double>());
    // A second pass is exact.
    write_bundle(back, dir);
    EXPECT_EQ(read_bundle(dir), back);
    std::filesystem::remove_all(dir);
}

TEST(BundleIo, MissingDirectoryThrows) {
    EXPECT_THROW(read_bundle("/nonexistent/bundle"), std::runtime_error);
}
