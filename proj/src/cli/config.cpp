#include "lfi/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lfi::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: " + value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + value);
}

std::string valid_method_list() {
    std::string out;
    for (infer::MethodKind m : infer::all_methods()) {
        if (!out.empty()) out += ", ";
        out += infer::method_name(m);
    }
    return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto positive_int = [&](const char* name) {
        const long long v = parse_int(name, value);
        if (v < 1) throw ConfigError(std::string("config key '") + name + "': must be positive");
        return static_cast<int>(v);
    };

    if (key == "model") {
        cfg.model = canonical_model_name(value);
    } else if (key == "methods") {
        cfg.methods.clear();
        for (const std::string& name : split(value, ',')) {
            if (name.empty()) continue;
            try {
                cfg.methods.push_back(infer::method_from_name(name));
            } catch (const ConfigError&) {
                throw ConfigError("unknown method: " + name + " (valid: " + valid_method_list() +
                                  ")");
            }
        }
        if (cfg.methods.empty()) throw ConfigError("config key 'methods': list is empty");
    } else if (key == "rounds") {
        cfg.rounds = positive_int("rounds");
    } else if (key == "n") {
        cfg.n_per_round = positive_int("n");
    } else if (key == "top_m") {
        cfg.top_m = positive_int("top_m");
    } else if (key == "estimator") {
        cfg.estimator = mi::estimator_from_name(value);
    } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const std::string& s : split(value, ',')) {
            if (s.empty()) continue;
            const long long v = parse_int("seeds", s);
            if (v < 0) throw ConfigError("config key 'seeds': must be non-negative");
            cfg.seeds.push_back(static_cast<std::uint64_t>(v));
        }
        if (cfg.seeds.empty()) throw ConfigError("config key 'seeds': list is empty");
    } else if (key == "d") {
        if (value == "auto") {
            cfg.stat_dim = 0;
        } else {
            cfg.stat_dim = positive_int("d");
        }
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "cache") {
        cfg.cache_dir = value;
    } else if (key == "eval") {
        cfg.evaluate = parse_bool("eval", value);
    } else if (key == "warm_start") {
        cfg.warm_start = parse_bool("warm_start", value);
    } else if (key == "posterior_samples") {
        cfg.posterior_samples = positive_int("posterior_samples");
    } else if (key == "m_perm") {
        cfg.m_perm = positive_int("m_perm");
    } else if (key == "stat_hidden") {
        cfg.stat_hidden.clear();
        for (const std::string& h : split(value, ',')) {
            if (h.empty()) continue;
            const long long v = parse_int("stat_hidden", h);
            if (v < 1) throw ConfigError("config key 'stat_hidden': must be positive");
            cfg.stat_hidden.push_back(static_cast<int>(v));
        }
        if (cfg.stat_hidden.empty())
            throw ConfigError("config key 'stat_hidden': list is empty");
    } else if (key == "stat_batch") {
        cfg.stat_batch = positive_int("stat_batch");
    } else if (key == "stat_lr") {
        cfg.stat_lr = parse_double("stat_lr", value);
    } else if (key == "stat_patience") {
        cfg.stat_patience = positive_int("stat_patience");
    } else if (key == "stat_max_epochs") {
        cfg.stat_max_epochs = positive_int("stat_max_epochs");
    } else if (key == "maf_flows") {
        cfg.maf_flows = positive_int("maf_flows");
    } else if (key == "maf_hidden") {
        cfg.maf_hidden = positive_int("maf_hidden");
    } else if (key == "maf_batch") {
        cfg.maf_batch = positive_int("maf_batch");
    } else if (key == "maf_lr") {
        cfg.maf_lr = parse_double("maf_lr", value);
    } else if (key == "maf_patience") {
        cfg.maf_patience = positive_int("maf_patience");
    } else if (key == "maf_max_epochs") {
        cfg.maf_max_epochs = positive_int("maf_max_epochs");
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

}  // namespace

KeyValues parse_key_value_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key) != 0) throw ConfigError("duplicate config key: " + key);
        kv[key] = value;
    }
    return kv;
}

ExperimentConfig resolve_config(const KeyValues& file_kv, const KeyValues& overrides) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : file_kv)
        if (overrides.count(key) == 0) apply_key(cfg, key, value);
    for (const auto& [key, value] : overrides) apply_key(cfg, key, value);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path, const KeyValues& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return resolve_config(parse_key_value_text(buf.str()), overrides);
}

KeyValues config_to_kv(const ExperimentConfig& cfg) {
    auto join_methods = [&] {
        std::string out;
        for (infer::MethodKind m : cfg.methods) {
            if (!out.empty()) out += ",";
            out += infer::method_name(m);
        }
        return out;
    };
    auto join_u64 = [](const std::vector<std::uint64_t>& v) {
        std::string out;
        for (std::uint64_t s : v) {
            if (!out.empty()) out += ",";
            out += std::to_string(s);
        }
        return out;
    };
    auto join_int = [](const std::vector<int>& v) {
        std::string out;
        for (int s : v) {
            if (!out.empty()) out += ",";
            out += std::to_string(s);
        }
        return out;
    };

    KeyValues kv;
    kv["model"] = cfg.model;
    kv["methods"] = join_methods();
    kv["rounds"] = std::to_string(cfg.rounds);
    kv["n"] = std::to_string(cfg.n_per_round);
    kv["top_m"] = std::to_string(cfg.top_m);
    kv["estimator"] = mi::estimator_name(cfg.estimator);
    kv["seeds"] = join_u64(cfg.seeds);
    kv["d"] = cfg.stat_dim == 0 ? std::string("auto") : std::to_string(cfg.stat_dim);
    kv["out"] = cfg.out_dir;
    kv["cache"] = cfg.cache_dir;
    kv["eval"] = cfg.evaluate ? "true" : "false";
    kv["warm_start"] = cfg.warm_start ? "true" : "false";
    kv["posterior_samples"] = std::to_string(cfg.posterior_samples);
    kv["m_perm"] = std::to_string(cfg.m_perm);
    kv["stat_hidden"] = join_int(cfg.stat_hidden);
    kv["stat_batch"] = std::to_string(cfg.stat_batch);
    kv["stat_lr"] = format_double(cfg.stat_lr);
    kv["stat_patience"] = std::to_string(cfg.stat_patience);
    kv["stat_max_epochs"] = std::to_string(cfg.stat_max_epochs);
    kv["maf_flows"] = std::to_string(cfg.maf_flows);
    kv["maf_hidden"] = std::to_string(cfg.maf_hidden);
    kv["maf_batch"] = std::to_string(cfg.maf_batch);
    kv["maf_lr"] = format_double(cfg.maf_lr);
    kv["maf_patience"] = std::to_string(cfg.maf_patience);
    kv["maf_max_epochs"] = std::to_string(cfg.maf_max_epochs);
    return kv;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    for (const auto& [key, value] : config_to_kv(cfg)) out << key << " = " << value << '\n';
    return out.str();
}

std::string canonical_model_name(const std::string& name) {
    std::string canon = name;
    std::replace(canon.begin(), canon.end(), '-', '_');
    if (canon == "ising" || canon == "gaussian_copula" || canon == "ou") return canon;
    throw ConfigError("unknown model: " + name + " (valid: ising, gaussian_copula, ou)");
}

std::string resolved_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("LFI_OUT"); env != nullptr && env[0] != '\0') return env;
    return "out";
}

int resolved_stat_dim(const ExperimentConfig& cfg, const sim::ModelSpec& spec) {
    return cfg.stat_dim != 0 ? cfg.stat_dim : mi::select_statistic_dim(spec.param_dim);
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, infer::MethodKind method) {
    const auto& order = infer::all_methods();
    const auto it = std::find(order.begin(), order.end(), method);
    require(it != order.end(), "derive_run_seed: unknown method");
    return mix_seed(master_seed, static_cast<std::uint64_t>(1 + (it - order.begin())));
}

infer::MethodConfig method_config(const ExperimentConfig& cfg, infer::MethodKind method,
                                  std::uint64_t master_seed) {
    infer::MethodConfig mc;
    mc.method = method;
    mc.rounds = cfg.rounds;
    mc.n_per_round = cfg.n_per_round;
    mc.top_m = cfg.top_m;
    mc.seed = derive_run_seed(master_seed, method);
    mc.warm_start = cfg.warm_start;
    mc.posterior_sample_count = cfg.posterior_samples;

    mc.infomax.estimator = cfg.estimator;
    mc.infomax.stat_dim = cfg.stat_dim;
    mc.infomax.m_perm = cfg.m_perm;
    mc.infomax.hidden = cfg.stat_hidden;
    mc.infomax.train.batch_size = cfg.stat_batch;
    mc.infomax.train.lr = cfg.stat_lr;
    mc.infomax.train.patience = cfg.stat_patience;
    mc.infomax.train.max_epochs = cfg.stat_max_epochs;

    mc.maf.arch.n_flows = cfg.maf_flows;
    mc.maf.arch.hidden = cfg.maf_hidden;
    mc.maf.train.batch_size = cfg.maf_batch;
    mc.maf.train.lr = cfg.maf_lr;
    mc.maf.train.patience = cfg.maf_patience;
    mc.maf.train.max_epochs = cfg.maf_max_epochs;
    return mc;
}

}  // namespace lfi::cli
