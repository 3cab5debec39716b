#include "physiopref/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace physio {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
    static const std::vector<std::string> keys = {
        "run.seed", "run.out", "run.threads", "run.force", "run.timing",
        "model.alphabet", "model.length", "model.arch", "model.ngram_k", "model.hidden_dim",
        "model.embed_dim", "model.d_model", "model.heads", "model.init_scale",
        "oracle.kind", "oracle.l_max", "oracle.g_max", "oracle.e_thresh", "oracle.cache",
        "ref.steps", "ref.batch", "ref.corpus_n", "ref.mean_run", "ref.h_fraction",
        "ref.checkpoint",
        "data.pool", "data.pairs", "data.strategy", "data.q_conf", "data.split_threshold",
        "data.frac_train", "data.frac_val", "data.frac_test", "data.allow_zero_delta",
        "data.hard_negatives_only", "data.dataset",
        "objective.name", "objective.beta", "objective.lambda", "objective.mu", "objective.tau",
        "objective.psi", "objective.linear_scale", "objective.ipo_tau", "objective.kto_lambda_w",
        "objective.kto_lambda_l", "objective.pg_kl_coef", "objective.pg_clip_eps",
        "objective.rm_steps", "objective.kl_cap",
        "optimizer.lr", "optimizer.beta1", "optimizer.beta2", "optimizer.eps",
        "train.steps", "train.batch", "train.eval_every", "train.eval_samples",
        "train.checkpoint", "train.log",
        "eval.samples", "eval.method", "eval.checkpoint", "eval.results", "eval.plane",
        "eval.boltzmann_t",
        "sweep.param", "sweep.grid", "sweep.output",
    };
    return keys;
}

void Config::check_known(const std::string& key, const std::string& origin) const {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(origin + ": unknown config key '" + key + "'");
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::string origin = path + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(origin + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(origin + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ": empty key");
        if (section.empty()) throw ConfigError(origin + ": key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        check_known(full, origin);
        values_[full] = value;
    }
}

void Config::set(const std::string& key, const std::string& value) {
    check_known(key, "flag override");
    values_[key] = value;
}

bool Config::contains(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::fetch(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& def) const {
    check_known(key, "lookup");
    const std::string v = contains(key) ? fetch(key) : def;
    snapshot_[key] = v;
    return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
    check_known(key, "lookup");
    if (!contains(key)) {
        snapshot_[key] = std::to_string(def);
        return def;
    }
    const std::string v = fetch(key);
    try {
        std::size_t pos = 0;
        const std::int64_t out = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        snapshot_[key] = v;
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) const {
    check_known(key, "lookup");
    if (!contains(key)) {
        snapshot_[key] = std::to_string(def);
        return def;
    }
    const std::string v = fetch(key);
    try {
        std::size_t pos = 0;
        const std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        snapshot_[key] = v;
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
}

double Config::get_dbl(const std::string& key, double def) const {
    check_known(key, "lookup");
    if (!contains(key)) {
        snapshot_[key] = std::to_string(def);
        return def;
    }
    const std::string v = fetch(key);
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        snapshot_[key] = v;
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool Config::get_bool(const std::string& key, bool def) const {
    check_known(key, "lookup");
    if (!contains(key)) {
        snapshot_[key] = def ? "true" : "false";
        return def;
    }
    std::string v = fetch(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    snapshot_[key] = v;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::optional<std::string> Config::get_opt(const std::string& key) const {
    check_known(key, "lookup");
    if (!contains(key)) return std::nullopt;
    const std::string v = fetch(key);
    snapshot_[key] = v;
    return v;
}

std::optional<double> Config::get_opt_dbl(const std::string& key) const {
    if (!contains(key)) {
        check_known(key, "lookup");
        return std::nullopt;
    }
    return get_dbl(key, 0.0);
}

std::optional<std::int64_t> Config::get_opt_int(const std::string& key) const {
    if (!contains(key)) {
        check_known(key, "lookup");
        return std::nullopt;
    }
    return get_int(key, 0);
}

}  // namespace physio
