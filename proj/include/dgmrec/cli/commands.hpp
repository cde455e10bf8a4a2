#pragma once

#include "dgmrec/cli/config.hpp"
#include "dgmrec/datagen/io.hpp"
#include "dgmrec/eval/diagnostics.hpp"
#include "dgmrec/eval/retrieval.hpp"
#include "dgmrec/numcore/checkpoint.hpp"
#include "dgmrec/trainer/gradcheck_suite.hpp"
#include "dgmrec/trainer/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace dgmrec::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_divergence = 3 };

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Provenance for one command invocation. Written as manifest.json next to
/// the files it lists; output paths are relative to that directory.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string started;
    std::string finished;

    json to_json() const {
        return {{"command", command}, {"config_hash", config_hash}, {"seed", seed},     {"inputs", inputs},
                {"outputs", outputs}, {"started", started},         {"finished", finished}};
    }

    static RunManifest from_json(const json& j) {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.inputs = j.at("inputs").get<std::vector<std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        m.started = j.at("started").get<std::string>();
        m.finished = j.at("finished").get<std::string>();
        return m;
    }

    void write(const fs::path& dir) {
        finished = utc_now();
        std::ofstream os(dir / "manifest.json");
        if (!os) {
            throw DataError("cannot write " + (dir / "manifest.json").string());
        }
        os << to_json().dump(2) << '\n';
    }

    static RunManifest read(const fs::path& dir) {
        std::ifstream is(dir / "manifest.json");
        if (!is) {
            throw DataError("missing " + (dir / "manifest.json").string());
        }
        try {
            return from_json(json::parse(is));
        } catch (const json::exception& e) {
            throw DataError("bad manifest: " + std::string(e.what()));
        }
    }
};

/// Line-delimited JSON sink.
class RecordWriter {
public:
    explicit RecordWriter(const fs::path& path) : os_(path) {
        if (!os_) {
            throw DataError("cannot write " + path.string());
        }
    }

    void write(const json& j) { os_ << j.dump() << '\n'; }

private:
    std::ofstream os_;
};

inline json metric_record(const std::string& metric, std::size_t k, const std::string& split, const std::string& bucket,
                          double value, std::uint64_t seed, const std::string& hash) {
    return {{"metric", metric}, {"K", k},       {"split", split},      {"bucket", bucket},
            {"value", value},   {"seed", seed}, {"config_hash", hash}};
}

inline json loss_json(const LossBreakdown& l) {
    return {{"bpr", l.bpr},         {"recon", l.recon},       {"gen", l.gen},           {"club", l.club},
            {"infonce", l.infonce}, {"bm_align", l.bm_align}, {"ui_align", l.ui_align}, {"total", l.total}};
}

inline json epoch_record(const EpochRecord& e, std::uint64_t seed, const std::string& hash) {
    json j = {{"record", "epoch"},
              {"epoch", e.epoch},
              {"loss", loss_json(e.loss)},
              {"valid_recall", e.valid_recall},
              {"valid_ndcg", e.valid_ndcg},
              {"generated", e.generated},
              {"seed", seed},
              {"config_hash", hash}};
    if (e.diagnostics) {
        j["general_specific_cos"] = e.diagnostics->general_specific_cos;
        j["cross_general_cos"] = e.diagnostics->cross_general_cos;
        if (e.diagnostics->probe_r2) {
            j["probe_r2"] = *e.diagnostics->probe_r2;
        }
    }
    return j;
}

// ---------------------------------------------------------------- gen-data

inline std::map<std::string, std::string> canonical(const DataSpec& s) {
    const auto& c = s.corpus;
    return {
        {"num_users", std::to_string(c.num_users)},
        {"num_items", std::to_string(c.num_items)},
        {"num_modalities", std::to_string(c.num_modalities)},
        {"shared_dim", std::to_string(c.shared_dim)},
        {"specific_dim", std::to_string(c.specific_dim)},
        {"raw_dims", join(c.raw_dims)},
        {"interactions_per_user", std::to_string(c.interactions_per_user)},
        {"noise", format_double(c.noise)},
        {"affinity_scale", format_double(c.affinity_scale)},
        {"seed", std::to_string(c.seed)},
        {"plan", s.plan},
        {"missing_ratio", format_double(s.missing_ratio)},
        {"new_item_fraction", format_double(s.new_item_fraction)},
        {"plan_seed", std::to_string(s.plan_seed)},
    };
}

inline DatasetBundle build_bundle(const DataSpec& s) {
    auto corpus = generate_corpus(s.corpus);
    const auto n = s.corpus.num_items;
    const auto m = s.corpus.num_modalities;
    MissingPlan plan = s.plan == "levels" ? make_missing_plan_levels(n, m, s.plan_seed)
                                          : make_missing_plan_ratio(n, m, {s.missing_ratio}, s.plan_seed).front();
    auto ds = s.new_item_fraction > 0.0 ? holdout_new_items(corpus.dataset, s.new_item_fraction, s.plan_seed + 1)
                                        : corpus.dataset;
    return make_bundle(std::move(ds), std::move(corpus.modalities), std::move(plan), std::move(corpus.truth.shared));
}

inline std::vector<std::string> bundle_files(std::size_t num_modalities, bool has_latent) {
    std::vector<std::string> f = {"meta.tsv", "interactions.tsv", "new_items.txt", "missing_plan.tsv"};
    for (std::size_t m = 0; m < num_modalities; ++m) {
        f.push_back("modality_" + std::to_string(m) + ".mft");
        f.push_back("truth_modality_" + std::to_string(m) + ".mft");
    }
    if (has_latent) {
        f.push_back("latent_shared.mft");
    }
    return f;
}

inline int cmd_gen_data(const std::string& spec_path, const fs::path& out_dir) {
    RunManifest man;
    man.command = "gen-data";
    man.started = utc_now();
    const auto spec = parse_data_spec(KeyValues::load(spec_path));
    man.config_hash = config_hash(canonical(spec));
    man.seed = spec.corpus.seed;
    man.inputs = {spec_path};
    const auto bundle = build_bundle(spec);
    try {
        write_bundle(bundle, out_dir);
    } catch (const fs::filesystem_error& e) {
        throw DataError(e.what());
    }
    man.outputs = bundle_files(bundle.num_modalities(), bundle.shared_latent.has_value());
    man.write(out_dir);
    std::cout << "wrote " << bundle.dataset.num_users << " users, " << bundle.dataset.num_items << " items, "
              << bundle.dataset.train.size() << " train pairs to " << out_dir.string() << '\n';
    return exit_ok;
}

// ------------------------------------------------------------------- train

/// What `train` reads: training fields plus the model to build and an
/// optional expected modality count checked against the data.
struct RunConfig {
    TrainConfig train;
    std::string model = "dgmrec";  // dgmrec | mf_bpr | lightgcn | dgmrec_nn_inject
    std::optional<std::size_t> num_modalities;

    std::map<std::string, std::string> canonical() const {
        auto c = cli::canonical(train);
        c["model"] = model;
        if (num_modalities) {
            c["num_modalities"] = std::to_string(*num_modalities);
        }
        return c;
    }

    std::string hash() const { return config_hash(canonical()); }

    std::string text() const {
        std::string s;
        for (const auto& [k, v] : canonical()) {
            s += k + " = " + v + '\n';
        }
        return s;
    }
};

inline RunConfig parse_run_config(KeyValues kv) {
    RunConfig rc;
    if (auto m = kv.raw("model")) {
        rc.model = *m;
        if (rc.model != "dgmrec") {
            try {
                parse_baseline(rc.model);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
    }
    std::size_t nm = 0;
    if (kv.has("num_modalities")) {
        kv.read("num_modalities", nm);
        rc.num_modalities = nm;
    }
    KeyValues rest;
    for (const auto& [k, v] : kv.values()) {
        if (k != "model" && k != "num_modalities") {
            rest.set(k, v);
        }
    }
    rc.train = parse_train_config(rest);
    return rc;
}

struct TrainOverrides {
    std::optional<std::string> ablation;
    std::optional<std::string> baseline;
    std::optional<int> max_epochs;
};

inline KeyValues apply_overrides(KeyValues kv, const TrainOverrides& o) {
    if (o.ablation) {
        kv.set("ablation", *o.ablation);
    }
    if (o.baseline) {
        kv.set("model", *o.baseline);
    }
    if (o.max_epochs) {
        kv.set("max_epochs", std::to_string(*o.max_epochs));
    }
    return kv;
}

inline std::unique_ptr<Recommender> make_recommender(const RunConfig& rc, const DatasetBundle& b) {
    if (rc.model == "dgmrec") {
        return std::make_unique<DgmrecRecommender>(rc.train, b);
    }
    switch (parse_baseline(rc.model)) {
    case BaselineKind::mf_bpr:
        return std::make_unique<CfRecommender>(rc.train, b.dataset, 0);
    case BaselineKind::lightgcn:
        return std::make_unique<CfRecommender>(rc.train, b.dataset, rc.train.lightgcn_layers);
    case BaselineKind::dgmrec_nn_inject:
        return std::make_unique<DgmrecRecommender>(rc.train, b, true);
    }
    throw UsageError("unknown model " + rc.model);
}

inline void check_compatible(const RunConfig& rc, const DatasetBundle& b) {
    if (rc.num_modalities && *rc.num_modalities != b.num_modalities()) {
        throw DataError("config expects " + std::to_string(*rc.num_modalities) + " modalities, data has " +
                        std::to_string(b.num_modalities()));
    }
}

inline DatasetBundle load_data(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw DataError("data directory not found: " + dir.string());
    }
    return read_bundle(dir);
}

/// Trains and writes checkpoint, per-epoch records, test metrics, the
/// canonical config and the manifest into `out_dir`.
inline TrainReport train_into(const RunConfig& rc, const DatasetBundle& bundle, const std::string& data_dir,
                              const fs::path& out_dir, const std::vector<std::string>& inputs) {
    check_compatible(rc, bundle);
    RunManifest man;
    man.command = "train";
    man.started = utc_now();
    man.config_hash = rc.hash();
    man.seed = rc.train.seed;
    man.inputs = inputs;
    man.inputs.push_back(data_dir);
    fs::create_directories(out_dir);

    auto model = make_recommender(rc, bundle);
    const auto report = run_training(*model, bundle, rc.train);

    {
        std::ofstream os(out_dir / "config.txt");
        os << rc.text();
    }
    save_checkpoint(model->params(), out_dir / "checkpoint.bin");
    man.outputs = {"config.txt", "checkpoint.bin", "epochs.jsonl", "metrics.jsonl"};
    if (auto* d = dynamic_cast<DgmrecRecommender*>(model.get())) {
        save_checkpoint(d->model().variational_params(), out_dir / "variational.bin");
        man.outputs.push_back("variational.bin");
        for (std::size_t m = 0; m < d->tables().size(); ++m) {
            const auto t = "table_" + std::to_string(m) + ".mft";
            const auto g = "graph_" + std::to_string(m) + ".tsv";
            write_features(d->tables()[m], out_dir / t);
            write_graph(d->graphs()[m], (out_dir / g).string());
            man.outputs.push_back(t);
            man.outputs.push_back(g);
        }
    }
    {
        RecordWriter w(out_dir / "epochs.jsonl");
        for (const auto& e : report.epochs) {
            w.write(epoch_record(e, rc.train.seed, man.config_hash));
        }
        json summary = {{"record", "summary"},        {"model", report.model},
                        {"best_epoch", report.best_epoch}, {"best_valid_recall", report.best_valid_recall},
                        {"stop_reason", report.stop_reason}, {"wall_seconds", report.wall_seconds},
                        {"seed", rc.train.seed},          {"config_hash", man.config_hash}};
        w.write(summary);
    }
    {
        RecordWriter w(out_dir / "metrics.jsonl");
        for (const auto& [k, mp] : report.test) {
            w.write(metric_record("recall", k, "test", "all", mp.recall, rc.train.seed, man.config_hash));
            w.write(metric_record("ndcg", k, "test", "all", mp.ndcg, rc.train.seed, man.config_hash));
        }
    }
    man.write(out_dir);
    return report;
}

inline int cmd_train(const std::string& config_path, const std::string& data_dir, const fs::path& out_dir,
                     const TrainOverrides& o) {
    const auto rc = parse_run_config(apply_overrides(KeyValues::load(config_path), o));
    const auto bundle = load_data(data_dir);
    const auto report = train_into(rc, bundle, data_dir, out_dir, {config_path});
    std::cout << report.model << ": " << report.epochs.size() << " epochs, best " << report.best_epoch
              << " (valid recall@" << rc.train.valid_k << " " << report.best_valid_recall << ")\n";
    for (const auto& [k, mp] : report.test) {
        std::cout << "  test recall@" << k << " " << mp.recall << "  ndcg@" << k << " " << mp.ndcg << '\n';
    }
    return exit_ok;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
    std::optional<std::string> config_path;  // must hash to the run's hash
    bool retrieval = false;
    bool diagnostics = false;
    std::vector<std::size_t> retrieval_ks = {10, 20};
};

/// Rebuilds the trained model of `run_dir` against `bundle`.
inline std::unique_ptr<Recommender> load_run(const fs::path& run_dir, const RunConfig& rc, const DatasetBundle& bundle) {
    check_compatible(rc, bundle);
    auto model = make_recommender(rc, bundle);
    try {
        load_checkpoint(model->params(), run_dir / "checkpoint.bin");
        if (auto* d = dynamic_cast<DgmrecRecommender*>(model.get())) {
            auto snap = d->snapshot();
            ParamStore& var = d->model().variational_params();
            load_checkpoint(var, run_dir / "variational.bin");
            snap.params = d->params().snapshot();
            snap.variational = var.snapshot();
            for (std::size_t m = 0; m < snap.tables.size(); ++m) {
                snap.tables[m] = read_features(run_dir / ("table_" + std::to_string(m) + ".mft"), static_cast<int>(m));
                snap.graphs[m] = read_graph((run_dir / ("graph_" + std::to_string(m) + ".tsv")).string(),
                                            bundle.dataset.num_items);
            }
            d->restore(snap);
        }
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("cannot load run " + run_dir.string() + ": " + e.what());
    }
    return model;
}

inline RunConfig read_run_config(const fs::path& run_dir, const std::optional<std::string>& config_path) {
    const auto man = RunManifest::read(run_dir);
    const auto rc = parse_run_config(KeyValues::load((run_dir / "config.txt").string()));
    if (rc.hash() != man.config_hash) {
        throw DataError("config hash mismatch: run has " + man.config_hash + ", config.txt hashes to " + rc.hash());
    }
    if (config_path) {
        const auto given = parse_run_config(KeyValues::load(*config_path));
        if (given.hash() != man.config_hash) {
            throw DataError("config hash mismatch: run has " + man.config_hash + ", " + *config_path + " hashes to " +
                            given.hash());
        }
    }
    return rc;
}

/// Writes all metric records for a loaded model; returns them as well.
inline std::vector<json> evaluate_run(const Recommender& model, const RunConfig& rc, const DatasetBundle& bundle,
                                      const EvalOptions& o) {
    const auto& cfg = rc.train;
    const auto hash = rc.hash();
    std::size_t depth = 0;
    for (auto k : cfg.eval_ks) {
        depth = std::max(depth, k);
    }
    const auto ranking = rank_all(model, bundle.dataset, depth);
    std::vector<json> out;
    for (const auto& [split, pairs] : {std::pair{std::string("valid"), &bundle.dataset.valid},
                                       std::pair{std::string("test"), &bundle.dataset.test}}) {
        for (auto k : cfg.eval_ks) {
            const auto mp = ranking_metrics(ranking, *pairs, k);
            out.push_back(metric_record("recall", k, split, "all", mp.recall, cfg.seed, hash));
            out.push_back(metric_record("ndcg", k, split, "all", mp.ndcg, cfg.seed, hash));
        }
    }
    for (auto k : cfg.eval_ks) {
        for (const auto& [level, mp] : eval_by_missing_level(ranking, bundle.dataset.test, bundle.plan, k)) {
            const auto bucket = "missing_" + std::to_string(level);
            out.push_back(metric_record("recall", k, "test", bucket, mp.recall, cfg.seed, hash));
            out.push_back(metric_record("ndcg", k, "test", bucket, mp.ndcg, cfg.seed, hash));
        }
    }
    const auto* d = dynamic_cast<const DgmrecRecommender*>(&model);
    if (o.retrieval) {
        if (!d) {
            throw UsageError("--retrieval needs a multimodal model");
        }
        const auto gen = cross_modal_retrieval_generated(d->generate_missing(), bundle.truth, bundle.plan);
        const auto nn = cross_modal_retrieval_nn(d->model(), bundle.truth, bundle.plan);
        for (auto k : o.retrieval_ks) {
            for (const auto& [name, res] : {std::pair{std::string("retrieval_generated"), &gen},
                                            std::pair{std::string("retrieval_nn"), &nn}}) {
                for (const auto& [level, hit] : hit_at_k(*res, k)) {
                    auto r = metric_record("hit", k, name, "missing_" + std::to_string(level), hit ? *hit : 0.0,
                                           cfg.seed, hash);
                    if (!hit) {
                        r["value"] = nullptr;
                    }
                    out.push_back(r);
                }
            }
        }
    }
    if (o.diagnostics) {
        if (!d) {
            throw UsageError("--diagnostics needs a multimodal model");
        }
        const auto rec = d->diagnostics(0, bundle.shared_latent);
        out.push_back(metric_record("general_specific_cos", 0, "all", "all", rec->general_specific_cos, cfg.seed, hash));
        out.push_back(metric_record("cross_general_cos", 0, "all", "all", rec->cross_general_cos, cfg.seed, hash));
        if (rec->probe_r2) {
            out.push_back(metric_record("probe_r2", 0, "all", "all", *rec->probe_r2, cfg.seed, hash));
        }
    }
    return out;
}

inline int cmd_eval(const fs::path& run_dir, const std::string& data_dir, const fs::path& out_dir, const EvalOptions& o) {
    RunManifest man;
    man.command = "eval";
    man.started = utc_now();
    const auto rc = read_run_config(run_dir, o.config_path);
    man.config_hash = rc.hash();
    man.seed = rc.train.seed;
    man.inputs = {run_dir.string(), data_dir};
    const auto bundle = load_data(data_dir);
    const auto model = load_run(run_dir, rc, bundle);
    const auto records = evaluate_run(*model, rc, bundle, o);
    fs::create_directories(out_dir);
    {
        RecordWriter w(out_dir / "eval.jsonl");
        for (const auto& r : records) {
            w.write(r);
        }
    }
    man.outputs = {"eval.jsonl"};
    man.write(out_dir);
    for (const auto& r : records) {
        if (r["bucket"] == "all" && r["split"] == "test") {
            std::cout << r["metric"].get<std::string>() << "@" << r["K"] << " " << r["value"] << '\n';
        }
    }
    return exit_ok;
}

// ------------------------------------------------------------------- sweep

struct SweepCell {
    std::string name;
    KeyValues config;
    std::optional<double> missing_ratio;
};

inline std::vector<SweepCell> expand_grid(const KeyValues& base, const GridSpec& g) {
    std::vector<SweepCell> cells{{"", base, std::nullopt}};
    auto expand = [&](const std::string& key, const std::vector<double>& values) {
        if (values.empty()) {
            return;
        }
        std::vector<SweepCell> next;
        for (const auto& c : cells) {
            for (double v : values) {
                SweepCell n = c;
                std::ostringstream label;
                label << key << '=' << v;
                n.name += (n.name.empty() ? "" : "_") + label.str();
                if (key == "missing_ratio") {
                    n.missing_ratio = v;
                } else {
                    n.config.set(key, format_double(v));
                }
                next.push_back(std::move(n));
            }
        }
        cells = std::move(next);
    };
    expand("lambda1", g.lambda1);
    expand("lambda2", g.lambda2);
    expand("alpha", g.alpha);
    expand("tau", g.tau);
    expand("missing_ratio", g.missing_ratio);
    if (!g.seeds.empty()) {
        std::vector<SweepCell> next;
        for (const auto& c : cells) {
            for (auto s : g.seeds) {
                SweepCell n = c;
                n.name += (n.name.empty() ? "" : "_") + std::string("seed=") + std::to_string(s);
                n.config.set("seed", std::to_string(s));
                next.push_back(std::move(n));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

/// One train + eval per grid cell, each in its own subdirectory, then a
/// summary table of test recall at the first cutoff.
inline int cmd_sweep(const std::string& config_path, const std::string& grid_path, const std::string& data_dir,
                     const fs::path& out_dir, std::uint64_t plan_seed = 7) {
    const auto base = KeyValues::load(config_path);
    const auto grid = parse_grid(KeyValues::load(grid_path));
    const auto cells = expand_grid(base, grid);
    std::vector<RunConfig> configs;
    for (const auto& c : cells) {
        configs.push_back(parse_run_config(c.config));
    }
    const auto bundle = load_data(data_dir);
    std::vector<MissingPlan> ratio_plans;
    if (!grid.missing_ratio.empty()) {
        auto sorted = grid.missing_ratio;
        std::sort(sorted.begin(), sorted.end());
        ratio_plans = make_missing_plan_ratio(bundle.dataset.num_items, bundle.num_modalities(), sorted, plan_seed);
    }
    auto plan_for = [&](double r) {
        for (const auto& p : ratio_plans) {
            if (p.ratio == r) {
                return p;
            }
        }
        throw std::logic_error("no plan for ratio");
    };

    fs::create_directories(out_dir);
    RunManifest man;
    man.command = "sweep";
    man.started = utc_now();
    man.config_hash = config_hash(base.values());
    man.inputs = {config_path, grid_path, data_dir};
    RecordWriter summary(out_dir / "summary.jsonl");
    man.outputs.push_back("summary.jsonl");
    std::cout << std::left << std::setw(48) << "cell" << std::setw(12) << "recall" << "ndcg\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& rc = configs[c];
        const auto b = cells[c].missing_ratio ? with_plan(bundle, plan_for(*cells[c].missing_ratio)) : bundle;
        const auto cell_dir = out_dir / cells[c].name;
        train_into(rc, b, data_dir, cell_dir, {config_path, grid_path});
        const auto model = load_run(cell_dir, rc, b);
        const auto records = evaluate_run(*model, rc, b, {});
        {
            RecordWriter w(cell_dir / "eval.jsonl");
            for (const auto& r : records) {
                w.write(r);
            }
        }
        // The cell's own manifest covers eval.jsonl too.
        auto cell_man = RunManifest::read(cell_dir);
        cell_man.outputs.push_back("eval.jsonl");
        cell_man.write(cell_dir);
        man.outputs.push_back(cells[c].name + "/manifest.json");

        const auto k = rc.train.eval_ks.front();
        double recall = 0.0, ndcg = 0.0;
        for (const auto& r : records) {
            if (r["split"] == "test" && r["bucket"] == "all" && r["K"] == k) {
                (r["metric"] == "recall" ? recall : ndcg) = r["value"].get<double>();
            }
        }
        json row = {{"cell", cells[c].name}, {"K", k}, {"recall", recall}, {"ndcg", ndcg},
                    {"seed", rc.train.seed}, {"config_hash", rc.hash()}};
        if (cells[c].missing_ratio) {
            row["missing_ratio"] = *cells[c].missing_ratio;
        }
        summary.write(row);
        std::cout << std::setw(48) << cells[c].name << std::setw(12) << recall << ndcg << '\n';
    }
    man.write(out_dir);
    return exit_ok;
}

// --------------------------------------------------------------- gradcheck

inline int cmd_gradcheck(std::uint64_t seed, double tolerance) {
    const auto checks = check_loss_gradients(seed);
    bool ok = true;
    for (const auto& c : checks) {
        const bool pass = c.result.max_rel_error < tolerance;
        ok = ok && pass;
        std::cout << (pass ? "ok   " : "FAIL ") << std::left << std::setw(12) << c.term << " max rel err "
                  << c.result.max_rel_error << " over " << c.result.coords_checked << " coords\n";
    }
    return ok ? exit_ok : exit_divergence;
}

} // namespace dgmrec::cli
