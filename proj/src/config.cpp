#include "dcct/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dcct {

void RunConfig::validate() const {
    dataset.validate();
    if (d_hidden < 1) throw ConfigError("d_hidden must be >= 1");
    if (d_out < 2) throw ConfigError("d_out must be >= 2");
    if (tau <= 0) throw ConfigError("tau must be > 0");
    if (alpha < 0 || alpha >= 1) throw ConfigError("alpha must be in [0,1)");
    if (beta < 0 || beta >= 1) throw ConfigError("beta must be in [0,1)");
    if (gamma <= 0) throw ConfigError("gamma must be > 0");
    if (epochs < 2) throw ConfigError("epochs must be >= 2");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (batch_p < 1 || batch_k < 1) throw ConfigError("batch_p/batch_k must be >= 1");
    if (lr <= 0) throw ConfigError("lr must be > 0");
    if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
    if (min_pts < 1) throw ConfigError("min_pts must be >= 1");
    if (k1 < 1 || k2 < 1 || k2 > k1) throw ConfigError("need 1 <= k2 <= k1");
    if (query_fraction <= 0 || query_fraction >= 1)
        throw ConfigError("query_fraction must be in (0,1)");
    schedule().validate();
}

ScheduleSpec RunConfig::schedule() const {
    ScheduleSpec s;
    s.base = base;
    s.delta = use_dcdp ? delta : 0.0;
    s.total_epochs = epochs;
    switch (clusterer) {
        case ClustererKind::dbscan: s.kind = ScheduleKind::dbscan_eps; break;
        case ClustererKind::infomap: s.kind = ScheduleKind::infomap_psi; break;
        case ClustererKind::kmeans: s.kind = ScheduleKind::kmeans_k; break;
    }
    return s;
}

double RunConfig::lr_at(int epoch) const {
    int stage = 0;
    if (epoch >= static_cast<int>(std::floor(0.8 * epochs)))
        stage = 2;
    else if (epoch >= static_cast<int>(std::floor(0.4 * epochs)))
        stage = 1;
    return lr * std::pow(lr_decay_factor, stage);
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

struct Reader {
    const std::map<std::string, std::string>& kv;
    mutable std::vector<std::string> consumed;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    template <typename T, typename F>
    void get(const std::string& key, T& out, F parse) const {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        consumed.push_back(key);
        try {
            out = parse(it->second);
        } catch (const std::exception&) {
            throw ConfigError("bad value for '" + key + "': " + it->second);
        }
    }

    void get_int(const std::string& key, int& out) const {
        get(key, out, [](const std::string& v) { return std::stoi(v); });
    }
    void get_u64(const std::string& key, std::uint64_t& out) const {
        get(key, out, [](const std::string& v) { return std::stoull(v); });
    }
    void get_double(const std::string& key, double& out) const {
        get(key, out, [](const std::string& v) { return std::stod(v); });
    }
    void get_bool(const std::string& key, bool& out) const {
        get(key, out, [key](const std::string& v) {
            if (v == "true") return true;
            if (v == "false") return false;
            throw ConfigError("expected true/false for '" + key + "'");
        });
    }
};

}  // namespace

std::map<std::string, std::string> load_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        kv[key] = value;
    }
    return kv;
}

void apply_overrides(std::map<std::string, std::string>& kv,
                     const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be KEY=VALUE: " + ov);
        kv[trim(ov.substr(0, eq))] = strip_quotes(trim(ov.substr(eq + 1)));
    }
}

RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
    Reader r{kv, {}};
    RunConfig cfg;

    for (const char* req : {"epochs", "iterations", "seed"})
        if (!r.has(req))
            throw ConfigError(std::string("missing required field '") + req + "'");

    r.get_int("dataset.n_identities", cfg.dataset.n_identities);
    r.get_int("dataset.samples_per_identity", cfg.dataset.samples_per_identity);
    r.get_int("dataset.d_in", cfg.dataset.d_in);
    r.get_int("dataset.n_cameras", cfg.dataset.n_cameras);
    r.get_double("dataset.intra_noise_sigma", cfg.dataset.intra_noise_sigma);
    r.get_double("dataset.confusable_fraction", cfg.dataset.confusable_fraction);
    r.get_double("dataset.confusable_gap", cfg.dataset.confusable_gap);
    r.get_double("dataset.camera_distortion_scale",
                 cfg.dataset.camera_distortion_scale);
    r.get_u64("dataset.seed", cfg.dataset.seed);

    r.get_int("d_hidden", cfg.d_hidden);
    r.get_int("d_out", cfg.d_out);
    r.get_double("tau", cfg.tau);
    r.get_double("alpha", cfg.alpha);
    r.get_double("beta", cfg.beta);
    r.get_double("gamma", cfg.gamma);
    r.get_double("base", cfg.base);
    r.get_double("delta", cfg.delta);
    r.get_int("epochs", cfg.epochs);
    r.get_int("iterations", cfg.iterations);
    r.get_int("batch_p", cfg.batch_p);
    r.get_int("batch_k", cfg.batch_k);
    r.get_double("lr", cfg.lr);
    r.get_double("weight_decay", cfg.weight_decay);
    r.get_double("lr_decay_factor", cfg.lr_decay_factor);
    r.get_int("min_pts", cfg.min_pts);
    r.get_int("k1", cfg.k1);
    r.get_int("k2", cfg.k2);
    r.get_double("jaccard_blend", cfg.jaccard_blend);
    r.get_double("query_fraction", cfg.query_fraction);
    r.get_u64("seed", cfg.seed);
    r.get_bool("use_dcdp", cfg.use_dcdp);
    r.get_bool("use_csm", cfg.use_csm);
    r.get_bool("normalize_memory", cfg.normalize_memory);

    std::string clusterer = "dbscan";
    r.get("clusterer", clusterer, [](const std::string& v) { return v; });
    if (clusterer == "dbscan")
        cfg.clusterer = ClustererKind::dbscan;
    else if (clusterer == "kmeans")
        cfg.clusterer = ClustererKind::kmeans;
    else if (clusterer == "infomap")
        cfg.clusterer = ClustererKind::infomap;
    else
        throw ConfigError("unknown clusterer '" + clusterer + "'");

    for (const auto& [key, _] : kv) {
        if (std::find(r.consumed.begin(), r.consumed.end(), key) ==
            r.consumed.end())
            throw ConfigError("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> config_to_map(const RunConfig& cfg) {
    std::map<std::string, std::string> kv;
    auto put_d = [&](const std::string& k, double v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        kv[k] = ss.str();
    };
    kv["dataset.n_identities"] = std::to_string(cfg.dataset.n_identities);
    kv["dataset.samples_per_identity"] =
        std::to_string(cfg.dataset.samples_per_identity);
    kv["dataset.d_in"] = std::to_string(cfg.dataset.d_in);
    kv["dataset.n_cameras"] = std::to_string(cfg.dataset.n_cameras);
    put_d("dataset.intra_noise_sigma", cfg.dataset.intra_noise_sigma);
    put_d("dataset.confusable_fraction", cfg.dataset.confusable_fraction);
    put_d("dataset.confusable_gap", cfg.dataset.confusable_gap);
    put_d("dataset.camera_distortion_scale", cfg.dataset.camera_distortion_scale);
    kv["dataset.seed"] = std::to_string(cfg.dataset.seed);
    kv["d_hidden"] = std::to_string(cfg.d_hidden);
    kv["d_out"] = std::to_string(cfg.d_out);
    put_d("tau", cfg.tau);
    put_d("alpha", cfg.alpha);
    put_d("beta", cfg.beta);
    put_d("gamma", cfg.gamma);
    put_d("base", cfg.base);
    put_d("delta", cfg.delta);
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["iterations"] = std::to_string(cfg.iterations);
    kv["batch_p"] = std::to_string(cfg.batch_p);
    kv["batch_k"] = std::to_string(cfg.batch_k);
    put_d("lr", cfg.lr);
    put_d("weight_decay", cfg.weight_decay);
    put_d("lr_decay_factor", cfg.lr_decay_factor);
    kv["min_pts"] = std::to_string(cfg.min_pts);
    kv["k1"] = std::to_string(cfg.k1);
    kv["k2"] = std::to_string(cfg.k2);
    put_d("jaccard_blend", cfg.jaccard_blend);
    put_d("query_fraction", cfg.query_fraction);
    kv["seed"] = std::to_string(cfg.seed);
    kv["use_dcdp"] = cfg.use_dcdp ? "true" : "false";
    kv["use_csm"] = cfg.use_csm ? "true" : "false";
    kv["normalize_memory"] = cfg.normalize_memory ? "true" : "false";
    switch (cfg.clusterer) {
        case ClustererKind::dbscan: kv["clusterer"] = "dbscan"; break;
        case ClustererKind::kmeans: kv["clusterer"] = "kmeans"; break;
        case ClustererKind::infomap: kv["clusterer"] = "infomap"; break;
    }
    return kv;
}

}  // namespace dcct
