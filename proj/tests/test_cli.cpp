#include "dgmrec/cli/commands.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <set>

using namespace dgmrec;
using namespace dgmrec::cli;

namespace {

const char* kSmallSpec = R"(# small corpus
num_users = 80
num_items = 60
num_modalities = 2
shared_dim = 4
specific_dim = 2
raw_dims = 8, 6
interactions_per_user = 10
noise = 0.1
affinity_scale = 1.0
seed = 5
plan = levels
missing_ratio = 0
new_item_fraction = 0
plan_seed = 2
)";

const char* kSmallTrain = R"(d = 8
batch_size = 256
lr = 0.005
max_epochs = 2
gen_interval = 1
eval_ks = 20, 50
)";

class CliDir : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("dgmrec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root);
        fs::create_directories(root);
        spec = write("spec.txt", kSmallSpec);
        config = write("train.txt", kSmallTrain);
    }
    void TearDown() override { fs::remove_all(root); }

    std::string write(const std::string& name, const std::string& text) {
        const auto p = root / name;
        std::ofstream(p) << text;
        return p.string();
    }

    std::string data() {
        const auto d = root / "data";
        if (!fs::exists(d)) {
            cmd_gen_data(spec, d);
        }
        return d.string();
    }

    static std::vector<json> read_jsonl(const fs::path& p) {
        std::ifstream is(p);
        std::vector<json> out;
        std::string line;
        while (std::getline(is, line)) {
            out.push_back(json::parse(line));
        }
        return out;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(is), {}};
    }

    fs::path root;
    std::string spec, config;
};

int run_cli(const std::string& args) {
    const int status = std::system((std::string(DGMREC_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(KeyValues, ParsesCommentsAndWhitespace) {
    auto kv = KeyValues::parse("# header\n a = 1 \n\nb=two # trailing\n");
    EXPECT_EQ(kv.values().size(), 2u);
    int a = 0;
    std::string b;
    kv.read("a", a);
    kv.read("b", b);
    EXPECT_EQ(a, 1);
    EXPECT_EQ(b, "two");
    EXPECT_NO_THROW(kv.reject_unknown());
}

TEST(KeyValues, RejectsMalformedText) {
    EXPECT_THROW(KeyValues::parse("a 1"), UsageError);
    EXPECT_THROW(KeyValues::parse("= 1"), UsageError);
    EXPECT_THROW(KeyValues::parse("a = 1\na = 2"), UsageError);
}

TEST(KeyValues, TypedParsingRejectsBadValues) {
    auto kv = KeyValues::parse("n = 3x\nu = -1\nb = maybe");
    int n = 0;
    std::size_t u = 0;
    bool b = false;
    EXPECT_THROW(kv.read("n", n), UsageError);
    EXPECT_THROW(kv.read("u", u), UsageError);
    EXPECT_THROW(kv.read("b", b), UsageError);
}

TEST(TrainConfigText, UnknownKeyIsRejected) {
    EXPECT_THROW(parse_train_config(KeyValues::parse("d = 8\nlearning_rate = 0.1")), UsageError);
}

TEST(TrainConfigText, ParsesEveryField) {
    const auto c = parse_train_config(KeyValues::parse(
        "d = 16\nk = 5\nlayers = 1\nlambda1 = 0.1\nlambda2 = 0.001\ntau = 0.4\nalpha = 0.2\nlr = 0.01\n"
        "batch_size = 64\ngen_interval = 3\npatience = 4\nmax_epochs = 9\nseed = 11\nablation = no_alignment\n"
        "bpr_form = neg_sigmoid\nvariational_steps = 2\nlightgcn_layers = 3\nvalid_k = 10\neval_ks = 10,20\n"
        "track_disentangle = true"));
    EXPECT_EQ(c.d, 16);
    EXPECT_EQ(c.k, 5u);
    EXPECT_EQ(c.ablation, Ablation::no_alignment);
    EXPECT_EQ(c.bpr_form, BprForm::neg_sigmoid);
    EXPECT_EQ(c.eval_ks, (std::vector<std::size_t>{10, 20}));
    EXPECT_TRUE(c.track_disentangle);
    EXPECT_DOUBLE_EQ(c.lambda2, 0.001);
    EXPECT_THROW(parse_train_config(KeyValues::parse("alpha = 2")), UsageError);
    EXPECT_THROW(parse_train_config(KeyValues::parse("ablation = no_fun")), UsageError);
}

TEST(ConfigHash, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(ConfigHash, StableUnderReorderingAndSensitiveToValues) {
    const auto a = parse_run_config(KeyValues::parse("d = 8\nlr = 0.01\nseed = 3"));
    const auto b = parse_run_config(KeyValues::parse("seed = 3\nlr = 0.01\nd = 8"));
    const auto c = parse_run_config(KeyValues::parse("seed = 4\nlr = 0.01\nd = 8"));
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    // Spelling out a default does not change the hash.
    EXPECT_EQ(parse_run_config(KeyValues::parse("d = 64")).hash(), parse_run_config(KeyValues::parse("")).hash());
    // Round trip through the canonical text.
    EXPECT_EQ(parse_run_config(KeyValues::parse(a.text())).hash(), a.hash());
}

TEST(DataSpecText, DefaultSpecParses) {
    const auto s = parse_data_spec(KeyValues::parse(default_data_spec_text()));
    const SyntheticSpec d;
    EXPECT_EQ(s.corpus.num_users, d.num_users);
    EXPECT_EQ(s.corpus.raw_dims, d.raw_dims);
    EXPECT_EQ(s.plan, "levels");
}

TEST(DataSpecText, MissingFieldIsNamed) {
    std::string text = kSmallSpec;
    text.replace(text.find("noise = 0.1\n"), 12, "");
    try {
        parse_data_spec(KeyValues::parse(text));
        FAIL() << "expected an error";
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("noise"), std::string::npos) << e.what();
    }
}

TEST(GridText, EmptyGridIsAnError) {
    EXPECT_THROW(parse_grid(KeyValues::parse("")), UsageError);
    EXPECT_THROW(parse_grid(KeyValues::parse("alpha = ,")), UsageError);
    EXPECT_THROW(parse_grid(KeyValues::parse("beta = 1")), UsageError);
}

TEST(GridText, DefaultAxesAndExpansion) {
    const auto g = parse_grid(KeyValues::parse("alpha = default\nlambda1 = default\nmissing_ratio = default"));
    EXPECT_EQ(g.alpha.front(), 0.0);
    EXPECT_EQ(g.alpha.size(), 6u);
    EXPECT_EQ(g.lambda1, (std::vector<double>{1.0, 0.1, 0.01, 0.001}));
    EXPECT_EQ(g.missing_ratio, (std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8}));
    EXPECT_EQ(g.cells(), 120u);
    const auto cells = expand_grid(KeyValues::parse(kSmallTrain), g);
    ASSERT_EQ(cells.size(), 120u);
    std::set<std::string> names;
    for (const auto& c : cells) {
        names.insert(c.name);
        EXPECT_TRUE(c.missing_ratio.has_value());
    }
    EXPECT_EQ(names.size(), 120u);
    EXPECT_EQ(cells.front().config.values().at("alpha"), "0");
}

TEST_F(CliDir, GenDataRoundTripsByteIdentically) {
    const auto d = fs::path(data());
    const auto bundle = read_bundle(d);
    const auto again = root / "again";
    write_bundle(bundle, again);
    for (const auto& f : bundle_files(2, true)) {
        EXPECT_EQ(slurp(d / f), slurp(again / f)) << f;
    }
    EXPECT_EQ(read_bundle(again), bundle);
}

TEST_F(CliDir, GenDataIsDeterministic) {
    const auto d = fs::path(data());
    const auto other = root / "other";
    cmd_gen_data(spec, other);
    for (const auto& f : bundle_files(2, true)) {
        EXPECT_EQ(slurp(d / f), slurp(other / f)) << f;
    }
}

TEST_F(CliDir, TrainOneEpochWritesOneRecord) {
    const auto run = root / "run";
    TrainOverrides o;
    o.max_epochs = 1;
    o.ablation = "no_generation";
    cmd_train(config, data(), run, o);
    const auto records = read_jsonl(run / "epochs.jsonl");
    std::size_t epochs = 0;
    for (const auto& r : records) {
        epochs += r["record"] == "epoch" ? 1 : 0;
    }
    EXPECT_EQ(epochs, 1u);
    const auto rc = parse_run_config(KeyValues::load((run / "config.txt").string()));
    EXPECT_EQ(rc.train.ablation, Ablation::no_generation);
    EXPECT_EQ(rc.train.max_epochs, 1);
    EXPECT_EQ(RunManifest::read(run).config_hash, rc.hash());
    EXPECT_EQ(records.front()["config_hash"], rc.hash());
}

TEST_F(CliDir, BaselineFlagTrainsCf) {
    const auto run = root / "run";
    TrainOverrides o;
    o.baseline = "lightgcn";
    cmd_train(config, data(), run, o);
    EXPECT_EQ(read_jsonl(run / "epochs.jsonl").back()["model"], "lightgcn");
    EXPECT_FALSE(fs::exists(run / "variational.bin"));
}

TEST_F(CliDir, EvalReproducesTrainingMetricsAndEmitsRecords) {
    const auto run = root / "run";
    cmd_train(config, data(), run, {});
    EvalOptions o;
    o.retrieval = true;
    cmd_eval(run, data(), root / "eval", o);
    const auto records = read_jsonl(root / "eval" / "eval.jsonl");
    std::map<std::string, int> per_split;
    std::size_t hits = 0;
    for (const auto& r : records) {
        EXPECT_TRUE(r.contains("metric") && r.contains("K") && r.contains("split") && r.contains("bucket") &&
                    r.contains("value") && r.contains("seed") && r.contains("config_hash"));
        if (r["bucket"] == "all" && (r["split"] == "valid" || r["split"] == "test")) {
            ++per_split[r["split"].get<std::string>()];
        }
        if (r["metric"] == "hit") {
            ++hits;
            EXPECT_TRUE(r["K"] == 10 || r["K"] == 20);
        }
    }
    EXPECT_EQ(per_split["valid"], 4);
    EXPECT_EQ(per_split["test"], 4);
    EXPECT_GT(hits, 0u);

    // Reloaded test metrics match the ones written at training time up to
    // the f32 storage of parameters.
    const auto trained = read_jsonl(run / "metrics.jsonl");
    for (const auto& t : trained) {
        for (const auto& r : records) {
            if (r["split"] == "test" && r["bucket"] == "all" && r["metric"] == t["metric"] && r["K"] == t["K"]) {
                EXPECT_NEAR(r["value"].get<double>(), t["value"].get<double>(), 0.02);
            }
        }
    }
}

TEST_F(CliDir, EvalRejectsHashMismatch) {
    const auto run = root / "run";
    TrainOverrides o;
    o.max_epochs = 1;
    cmd_train(config, data(), run, o);
    EvalOptions opts;
    opts.config_path = write("other.txt", "d = 8\nlr = 0.5\n");
    EXPECT_THROW(cmd_eval(run, data(), root / "eval", opts), DataError);
    auto text = slurp(run / "config.txt");
    text.replace(text.find("seed = 1\n"), 9, "seed = 2\n");
    std::ofstream(run / "config.txt") << text;
    EXPECT_THROW(cmd_eval(run, data(), root / "eval", {}), DataError);
}

TEST_F(CliDir, ModalityCountMismatchIsDataError) {
    const auto cfg = write("three.txt", std::string(kSmallTrain) + "num_modalities = 3\n");
    EXPECT_THROW(cmd_train(cfg, data(), root / "run", {}), DataError);
}

TEST_F(CliDir, UntrainedModelScoresNearRandomRecall) {
    const auto bundle = read_bundle(data());
    auto rc = parse_run_config(KeyValues::parse(kSmallTrain));
    const auto model = make_recommender(rc, bundle);
    const auto records = evaluate_run(*model, rc, bundle, {});
    // Random ranking over the 52 unseen items of each user.
    const double expected = 20.0 / (60.0 - 8.0);
    for (const auto& r : records) {
        if (r["metric"] == "recall" && r["K"] == 20 && r["split"] == "test" && r["bucket"] == "all") {
            const double v = r["value"].get<double>();
            EXPECT_GT(v, expected / 3.0);
            EXPECT_LT(v, expected * 3.0);
        }
    }
}

TEST_F(CliDir, SweepOfOneCellMatchesTrainThenEval) {
    const auto grid = write("grid.txt", "alpha = 0.4\n");
    cmd_sweep(config, grid, data(), root / "sweep");
    const auto cfg = write("cell.txt", std::string(kSmallTrain) + "alpha = 0.4\n");
    cmd_train(cfg, data(), root / "run", {});
    cmd_eval(root / "run", data(), root / "eval", {});
    const auto a = read_jsonl(root / "sweep" / "alpha=0.4" / "eval.jsonl");
    const auto b = read_jsonl(root / "eval" / "eval.jsonl");
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k], b[k]);
    }
    EXPECT_EQ(read_jsonl(root / "sweep" / "summary.jsonl").size(), 1u);
}

TEST_F(CliDir, EveryArtifactHasExactlyOneManifest) {
    const auto grid = write("grid.txt", "missing_ratio = 0, 0.4\n");
    cmd_sweep(config, grid, data(), root / "sweep");
    std::map<fs::path, int> owners;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().filename() == "manifest.json") {
            const auto m = RunManifest::read(e.path().parent_path());
            for (const auto& o : m.outputs) {
                ++owners[fs::weakly_canonical(e.path().parent_path() / o)];
            }
        }
    }
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json" && e.path().parent_path() != root) {
            EXPECT_EQ(owners[fs::weakly_canonical(e.path())], 1) << e.path();
        }
    }
}

TEST_F(CliDir, ExitCodes) {
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("no-such-command"), 1);
    EXPECT_EQ(run_cli("train --config " + config), 1);
    EXPECT_EQ(run_cli("gen-data --spec " + write("bad.txt", "num_users = 3\n") + " --out " + (root / "x").string()), 1);
    EXPECT_EQ(run_cli("train --config " + config + " --data " + (root / "nowhere").string() + " --out " +
                      (root / "r").string()),
              2);
    EXPECT_EQ(run_cli("train --config " + write("nan.txt", "lr = 1e300\nd = 4\nmax_epochs = 3\n") + " --data " + data() +
                      " --out " + (root / "r").string()),
              3);
    EXPECT_EQ(run_cli("gen-data --print-default-spec"), 0);
}
