#pragma once

#include "dgmrec/datagen/synthetic.hpp"
#include "dgmrec/trainer/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgmrec::cli {

/// Wrong flags, malformed config text, unknown keys. Maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) {
        part = trim(part);
        if (!part.empty()) {
            out.push_back(part);
        }
    }
    return out;
}

/// Flat `key = value` text. Blank lines and `#` comments are skipped.
/// Typed getters mark keys as consumed; `reject_unknown` then fails on any
/// key nobody asked for.
class KeyValues {
public:
    KeyValues() = default;

    static KeyValues parse(const std::string& text, const std::string& origin = "config") {
        KeyValues kv;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) {
                line.resize(hash);
            }
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) {
                throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
            }
            if (!kv.values_.emplace(key, trim(line.substr(eq + 1))).second) {
                throw UsageError(origin + ": duplicate key " + key);
            }
        }
        return kv;
    }

    static KeyValues load(const std::string& path) {
        std::ifstream is(path);
        if (!is) {
            throw UsageError("cannot read config " + path);
        }
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Raw string; throws naming the key when `required` and absent.
    std::optional<std::string> raw(const std::string& key, bool required = false) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            if (required) {
                throw UsageError("missing field: " + key);
            }
            return std::nullopt;
        }
        used_.insert(key);
        return it->second;
    }

    template <class T>
    void read(const std::string& key, T& out, bool required = false) {
        const auto v = raw(key, required);
        if (!v) {
            return;
        }
        try {
            out = convert<T>(*v);
        } catch (const std::exception&) {
            throw UsageError("bad value for " + key + ": '" + *v + "'");
        }
    }

    void reject_unknown() const {
        for (const auto& [k, v] : values_) {
            if (!used_.count(k)) {
                throw UsageError("unknown config key: " + k);
            }
        }
    }

private:
    template <class T>
    static T convert(const std::string& s) {
        std::size_t pos = 0;
        T out{};
        if constexpr (std::is_same_v<T, std::string>) {
            return s;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (s == "true" || s == "1") {
                return true;
            }
            if (s == "false" || s == "0") {
                return false;
            }
            throw std::invalid_argument(s);
        } else if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(s, &pos));
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!s.empty() && s[0] == '-') {
                throw std::invalid_argument(s);
            }
            out = static_cast<T>(std::stoull(s, &pos));
        } else if constexpr (std::is_integral_v<T>) {
            out = static_cast<T>(std::stoll(s, &pos));
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
            for (const auto& p : split(s, ',')) {
                out.push_back(convert<std::size_t>(p));
            }
            return out;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            for (const auto& p : split(s, ',')) {
                out.push_back(convert<double>(p));
            }
            return out;
        }
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return out;
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

/// Hash of the canonical `key=value` lines in key order, so reordering a
/// file never changes it.
inline std::string config_hash(const std::map<std::string, std::string>& canonical) {
    std::string s;
    for (const auto& [k, v] : canonical) {
        s += k + '=' + v + '\n';
    }
    return hex64(fnv1a(s));
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + (std::is_floating_point_v<T> ? format_double(static_cast<double>(v[i])) : std::to_string(v[i]));
    }
    return s;
}

inline std::string to_string(BprForm f) { return f == BprForm::log_sigmoid ? "log_sigmoid" : "neg_sigmoid"; }

inline BprForm parse_bpr_form(const std::string& s) {
    if (s == "log_sigmoid") {
        return BprForm::log_sigmoid;
    }
    if (s == "neg_sigmoid") {
        return BprForm::neg_sigmoid;
    }
    throw std::invalid_argument(s);
}

/// Every training field with its effective value; the hashing input.
inline std::map<std::string, std::string> canonical(const TrainConfig& c) {
    return {
        {"d", std::to_string(c.d)},
        {"k", std::to_string(c.k)},
        {"layers", std::to_string(c.layers)},
        {"lambda1", format_double(c.lambda1)},
        {"lambda2", format_double(c.lambda2)},
        {"tau", format_double(c.tau)},
        {"alpha", format_double(c.alpha)},
        {"lr", format_double(c.lr)},
        {"batch_size", std::to_string(c.batch_size)},
        {"gen_interval", std::to_string(c.gen_interval)},
        {"patience", std::to_string(c.patience)},
        {"max_epochs", std::to_string(c.max_epochs)},
        {"seed", std::to_string(c.seed)},
        {"ablation", to_string(c.ablation)},
        {"bpr_form", to_string(c.bpr_form)},
        {"variational_steps", std::to_string(c.variational_steps)},
        {"lightgcn_layers", std::to_string(c.lightgcn_layers)},
        {"valid_k", std::to_string(c.valid_k)},
        {"eval_ks", join(c.eval_ks)},
        {"track_disentangle", c.track_disentangle ? "true" : "false"},
    };
}

/// Reads training fields over the defaults; unknown keys are rejected.
inline TrainConfig parse_train_config(KeyValues kv) {
    TrainConfig c;
    kv.read("d", c.d);
    kv.read("k", c.k);
    kv.read("layers", c.layers);
    kv.read("lambda1", c.lambda1);
    kv.read("lambda2", c.lambda2);
    kv.read("tau", c.tau);
    kv.read("alpha", c.alpha);
    kv.read("lr", c.lr);
    kv.read("batch_size", c.batch_size);
    kv.read("gen_interval", c.gen_interval);
    kv.read("patience", c.patience);
    kv.read("max_epochs", c.max_epochs);
    kv.read("seed", c.seed);
    kv.read("variational_steps", c.variational_steps);
    kv.read("lightgcn_layers", c.lightgcn_layers);
    kv.read("valid_k", c.valid_k);
    kv.read("eval_ks", c.eval_ks);
    kv.read("track_disentangle", c.track_disentangle);
    if (auto a = kv.raw("ablation")) {
        try {
            c.ablation = parse_ablation(*a);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (auto b = kv.raw("bpr_form")) {
        try {
            c.bpr_form = parse_bpr_form(*b);
        } catch (const std::invalid_argument&) {
            throw UsageError("bad value for bpr_form: '" + *b + "'");
        }
    }
    kv.reject_unknown();
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
    return c;
}

/// What `gen-data` builds: the corpus plus how items are hidden.
struct DataSpec {
    SyntheticSpec corpus;
    std::string plan = "levels";  // levels | ratio
    double missing_ratio = 0.0;
    double new_item_fraction = 0.0;
    std::uint64_t plan_seed = 2;
};

inline const std::vector<std::string>& data_spec_fields() {
    static const std::vector<std::string> f = {
        "num_users",  "num_items", "num_modalities", "shared_dim",    "specific_dim",      "raw_dims",
        "interactions_per_user", "noise", "affinity_scale", "seed", "plan", "missing_ratio",
        "new_item_fraction", "plan_seed",
    };
    return f;
}

/// Every field is required so a data directory never depends on silent
/// defaults.
inline DataSpec parse_data_spec(KeyValues kv) {
    DataSpec s;
    auto& c = s.corpus;
    std::vector<std::size_t> raw_dims;
    kv.read("num_users", c.num_users, true);
    kv.read("num_items", c.num_items, true);
    kv.read("num_modalities", c.num_modalities, true);
    kv.read("shared_dim", c.shared_dim, true);
    kv.read("specific_dim", c.specific_dim, true);
    kv.read("raw_dims", raw_dims, true);
    c.raw_dims = raw_dims;
    kv.read("interactions_per_user", c.interactions_per_user, true);
    kv.read("noise", c.noise, true);
    kv.read("affinity_scale", c.affinity_scale, true);
    kv.read("seed", c.seed, true);
    kv.read("plan", s.plan, true);
    kv.read("missing_ratio", s.missing_ratio, true);
    kv.read("new_item_fraction", s.new_item_fraction, true);
    kv.read("plan_seed", s.plan_seed, true);
    kv.reject_unknown();
    if (s.plan != "levels" && s.plan != "ratio") {
        throw UsageError("plan must be levels or ratio");
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid data spec: ") + e.what());
    }
    if (!(s.missing_ratio >= 0.0 && s.missing_ratio <= 1.0)) {
        throw UsageError("missing_ratio must lie in [0, 1]");
    }
    if (!(s.new_item_fraction >= 0.0 && s.new_item_fraction < 1.0)) {
        throw UsageError("new_item_fraction must lie in [0, 1)");
    }
    return s;
}

inline std::string default_data_spec_text() {
    const SyntheticSpec c;
    const DataSpec s;
    std::ostringstream os;
    os << "num_users = " << c.num_users << '\n'
       << "num_items = " << c.num_items << '\n'
       << "num_modalities = " << c.num_modalities << '\n'
       << "shared_dim = " << c.shared_dim << '\n'
       << "specific_dim = " << c.specific_dim << '\n'
       << "raw_dims = " << join(c.raw_dims) << '\n'
       << "interactions_per_user = " << c.interactions_per_user << '\n'
       << "noise = " << format_double(c.noise) << '\n'
       << "affinity_scale = " << format_double(c.affinity_scale) << '\n'
       << "seed = " << c.seed << '\n'
       << "plan = " << s.plan << '\n'
       << "missing_ratio = " << format_double(s.missing_ratio) << '\n'
       << "new_item_fraction = " << format_double(s.new_item_fraction) << '\n'
       << "plan_seed = " << s.plan_seed << '\n';
    return os.str();
}

/// Sweep axes. Absent axes keep the base config's value.
struct GridSpec {
    std::vector<double> lambda1;
    std::vector<double> lambda2;
    std::vector<double> alpha;
    std::vector<double> tau;
    std::vector<double> missing_ratio;
    std::vector<std::uint64_t> seeds;

    std::size_t cells() const {
        std::size_t n = 1;
        bool any = false;
        for (const auto* axis : {&lambda1, &lambda2, &alpha, &tau, &missing_ratio}) {
            if (!axis->empty()) {
                n *= axis->size();
                any = true;
            }
        }
        if (!seeds.empty()) {
            n *= seeds.size();
            any = true;
        }
        return any ? n : 0;
    }
};

inline GridSpec parse_grid(KeyValues kv) {
    GridSpec g;
    auto axis = [&](const std::string& key, std::vector<double>& out, const std::vector<double>& preset) {
        if (auto v = kv.raw(key)) {
            if (*v == "default") {
                out = preset;
                return;
            }
            try {
                for (const auto& p : split(*v, ',')) {
                    out.push_back(std::stod(p));
                }
            } catch (const std::exception&) {
                throw UsageError("bad value for " + key + ": '" + *v + "'");
            }
            if (v->find_first_not_of(" ,") == std::string::npos) {
                throw UsageError("empty axis: " + key);
            }
        }
    };
    axis("lambda1", g.lambda1, lambda_grid());
    axis("lambda2", g.lambda2, lambda_grid());
    axis("alpha", g.alpha, alpha_grid());
    axis("tau", g.tau, tau_grid());
    axis("missing_ratio", g.missing_ratio, {0.0, 0.2, 0.4, 0.6, 0.8});
    std::vector<std::size_t> seeds;
    kv.read("seeds", seeds);
    g.seeds.assign(seeds.begin(), seeds.end());
    kv.reject_unknown();
    if (g.cells() == 0) {
        throw UsageError("empty grid: no axis given");
    }
    for (const auto& m : g.missing_ratio) {
        if (!(m >= 0.0 && m <= 1.0)) {
            throw UsageError("missing_ratio values must lie in [0, 1]");
        }
    }
    return g;
}

} // namespace dgmrec::cli
