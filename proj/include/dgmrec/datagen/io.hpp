#pragma once

#include "dgmrec/datagen/missing.hpp"
#include "dgmrec/datagen/synthetic.hpp"
#include "dgmrec/numcore/binary_io.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace dgmrec {

/// Raised for unreadable or inconsistent on-disk data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

/// `user<TAB>item<TAB>split` per pair; train, then valid, then test.
inline void write_interactions(const InteractionDataset& ds, const fs::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw DataError("cannot write " + path.string());
    }
    auto dump = [&](const std::vector<Interaction>& pairs, const char* split) {
        for (const auto& p : pairs) {
            os << p.user << '\t' << p.item << '\t' << split << '\n';
        }
    };
    dump(ds.train, "train");
    dump(ds.valid, "valid");
    dump(ds.test, "test");
}

inline void read_interactions(const fs::path& path, InteractionDataset& ds) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    ds.train.clear();
    ds.valid.clear();
    ds.test.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        long long u = -1, i = -1;
        std::string split;
        if (!(ls >> u >> i >> split) || u < 0 || i < 0) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed interaction line");
        }
        Interaction p{static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i)};
        if (split == "train") {
            ds.train.push_back(p);
        } else if (split == "valid") {
            ds.valid.push_back(p);
        } else if (split == "test") {
            ds.test.push_back(p);
        } else {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": unknown split '" + split + "'");
        }
    }
}

/// Binary layout: "MFT1", u32 num_items, u32 d_m, row-major f32 features,
/// then one availability byte per item.
inline void write_features(const ModalityTable& t, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot write " + path.string());
    }
    os.write("MFT1", 4);
    binio::write_u32(os, static_cast<std::uint32_t>(t.num_items()));
    binio::write_u32(os, static_cast<std::uint32_t>(t.dim()));
    for (Index k = 0; k < t.features.size(); ++k) {
        binio::write_f32(os, static_cast<float>(t.features.data()[k]));
    }
    for (auto a : t.available) {
        const char b = a ? 1 : 0;
        os.write(&b, 1);
    }
}

inline ModalityTable read_features(const fs::path& path, int modality_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    try {
        binio::expect_magic(is, "MFT1");
        const auto n = binio::read_u32(is);
        const auto d = binio::read_u32(is);
        ModalityTable t;
        t.modality_id = modality_id;
        t.features.resize(n, d);
        for (Index k = 0; k < t.features.size(); ++k) {
            t.features.data()[k] = binio::read_f32(is);
        }
        t.available.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            char b = 0;
            if (!is.read(&b, 1) || (b != 0 && b != 1)) {
                throw DataError("bad availability byte");
            }
            t.available[i] = static_cast<std::uint8_t>(b);
        }
        return t;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

/// `item<TAB>modality` per missing entry.
inline void write_missing_plan(const MissingPlan& plan, const fs::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw DataError("cannot write " + path.string());
    }
    for (std::size_t i = 0; i < plan.num_items; ++i) {
        for (std::size_t m = 0; m < plan.num_modalities; ++m) {
            if (plan.missing(i, m)) {
                os << i << '\t' << m << '\n';
            }
        }
    }
}

inline MissingPlan read_missing_plan(const fs::path& path, std::size_t num_items, std::size_t num_modalities) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    MissingPlan plan = MissingPlan::none(num_items, num_modalities);
    long long i = 0, m = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        if (!(ls >> i >> m) || i < 0 || m < 0 || static_cast<std::size_t>(i) >= num_items ||
            static_cast<std::size_t>(m) >= num_modalities) {
            throw DataError(path.string() + ": bad missing-plan line '" + line + "'");
        }
        plan.set_missing(static_cast<std::size_t>(i), static_cast<std::size_t>(m));
    }
    return plan;
}

/// Everything the trainer and evaluator read from a data directory.
struct DatasetBundle {
    InteractionDataset dataset;
    std::vector<ModalityTable> modalities;  // observed: placeholders in missing rows
    std::vector<ModalityTable> truth;       // complete features kept for retrieval checks
    MissingPlan plan;
    std::optional<Mat> shared_latent;

    std::size_t num_modalities() const { return modalities.size(); }

    bool operator==(const DatasetBundle& o) const {
        return dataset == o.dataset && modalities == o.modalities && truth == o.truth && plan == o.plan &&
               shared_latent.has_value() == o.shared_latent.has_value() &&
               (!shared_latent || *shared_latent == *o.shared_latent);
    }
};

/// Observed tables = truth with `plan` applied.
inline DatasetBundle make_bundle(InteractionDataset ds, std::vector<ModalityTable> truth, MissingPlan plan,
                                 std::optional<Mat> shared_latent = std::nullopt) {
    DatasetBundle b;
    b.dataset = std::move(ds);
    b.truth = std::move(truth);
    b.modalities = b.truth;
    apply_missing_plan(b.modalities, plan);
    b.plan = std::move(plan);
    b.shared_latent = std::move(shared_latent);
    return b;
}

/// Same bundle with a different plan over the same truth.
inline DatasetBundle with_plan(const DatasetBundle& b, MissingPlan plan) {
    return make_bundle(b.dataset, b.truth, std::move(plan), b.shared_latent);
}

inline void write_bundle(const DatasetBundle& b, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "meta.tsv");
        if (!os) {
            throw DataError("cannot write " + (dir / "meta.tsv").string());
        }
        os << "num_users\t" << b.dataset.num_users << '\n';
        os << "num_items\t" << b.dataset.num_items << '\n';
        os << "num_modalities\t" << b.modalities.size() << '\n';
        os << "plan_mode\t" << (b.plan.mode == MissingPlan::Mode::levels ? "levels" : "ratio") << '\n';
        os << "plan_ratio\t" << b.plan.ratio << '\n';
    }
    write_interactions(b.dataset, dir / "interactions.tsv");
    {
        std::ofstream os(dir / "new_items.txt");
        for (std::size_t i = 0; i < b.dataset.num_items; ++i) {
            if (b.dataset.new_item[i]) {
                os << i << '\n';
            }
        }
    }
    for (std::size_t m = 0; m < b.modalities.size(); ++m) {
        write_features(b.modalities[m], dir / ("modality_" + std::to_string(m) + ".mft"));
        write_features(b.truth[m], dir / ("truth_modality_" + std::to_string(m) + ".mft"));
    }
    write_missing_plan(b.plan, dir / "missing_plan.tsv");
    if (b.shared_latent) {
        ModalityTable z;
        z.features = *b.shared_latent;
        z.available.assign(static_cast<std::size_t>(z.features.rows()), 1);
        write_features(z, dir / "latent_shared.mft");
    }
}

inline DatasetBundle read_bundle(const fs::path& dir) {
    std::map<std::string, std::string> meta;
    {
        std::ifstream is(dir / "meta.tsv");
        if (!is) {
            throw DataError("missing " + (dir / "meta.tsv").string());
        }
        std::string k, v;
        while (is >> k >> v) {
            meta[k] = v;
        }
    }
    auto get = [&](const std::string& k) -> std::size_t {
        auto it = meta.find(k);
        if (it == meta.end()) {
            throw DataError("meta.tsv lacks field " + k);
        }
        return static_cast<std::size_t>(std::stoull(it->second));
    };
    DatasetBundle b;
    b.dataset.num_users = get("num_users");
    b.dataset.num_items = get("num_items");
    const auto n_mod = get("num_modalities");
    read_interactions(dir / "interactions.tsv", b.dataset);
    b.dataset.new_item.assign(b.dataset.num_items, 0);
    {
        std::ifstream is(dir / "new_items.txt");
        long long i = 0;
        while (is >> i) {
            if (i < 0 || static_cast<std::size_t>(i) >= b.dataset.num_items) {
                throw DataError("new item id out of range");
            }
            b.dataset.new_item[static_cast<std::size_t>(i)] = 1;
        }
    }
    try {
        b.dataset.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid interactions: ") + e.what());
    }
    for (std::size_t m = 0; m < n_mod; ++m) {
        b.modalities.push_back(read_features(dir / ("modality_" + std::to_string(m) + ".mft"), static_cast<int>(m)));
        b.truth.push_back(read_features(dir / ("truth_modality_" + std::to_string(m) + ".mft"), static_cast<int>(m)));
        if (static_cast<std::size_t>(b.modalities.back().num_items()) != b.dataset.num_items) {
            throw DataError("feature table item count mismatch for modality " + std::to_string(m));
        }
    }
    b.plan = read_missing_plan(dir / "missing_plan.tsv", b.dataset.num_items, n_mod);
    b.plan.mode = meta.count("plan_mode") && meta["plan_mode"] == "levels" ? MissingPlan::Mode::levels
                                                                           : MissingPlan::Mode::ratio;
    if (meta.count("plan_ratio")) {
        b.plan.ratio = std::stod(meta["plan_ratio"]);
    }
    if (fs::exists(dir / "latent_shared.mft")) {
        b.shared_latent = read_features(dir / "latent_shared.mft", -1).features;
    }
    return b;
}

} // namespace dgmrec
