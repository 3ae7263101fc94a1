#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "kgmix/errors.hpp"
#include "kgmix/models.hpp"

namespace kgmix {

enum class TrainMethod { Standard, Oversample, Reweight, Focal, KgMixup };

inline std::string to_string(TrainMethod m) {
    switch (m) {
        case TrainMethod::Standard: return "standard";
        case TrainMethod::Oversample: return "oversample";
        case TrainMethod::Reweight: return "reweight";
        case TrainMethod::Focal: return "focal";
        case TrainMethod::KgMixup: return "kg_mixup";
    }
    throw ConfigError("unknown training method");
}

inline TrainMethod train_method_from_string(const std::string& s) {
    if (s == "standard") return TrainMethod::Standard;
    if (s == "oversample") return TrainMethod::Oversample;
    if (s == "reweight") return TrainMethod::Reweight;
    if (s == "focal") return TrainMethod::Focal;
    if (s == "kg_mixup") return TrainMethod::KgMixup;
    throw ConfigError("unknown training method: " + s);
}

// All training hyperparameters. Config keys are the field names.
struct TrainConfig {
    ModelKind model_kind = ModelKind::DistMult;
    int32_t n_v = 200;  // entity embedding dim
    int32_t n_r = 200;  // relation embedding dim
    int32_t epochs = 100;
    int32_t pretrain_epochs = -1;  // -1: use 25% of epochs
    int32_t batch_size = 128;
    int32_t negatives = 100;  // corrupted tails per positive
    double lr = 1e-3;
    double lr_decay = 1.0;  // multiplicative, applied per epoch
    double label_smoothing = 0.0;
    double dropout1 = 0.0;
    double dropout2 = 0.0;
    double dropout3 = 0.0;
    TrainMethod method = TrainMethod::Standard;
    int32_t degree_threshold = 5;   // eta
    int32_t synth_per_triple = 5;   // k
    double synth_loss_weight = 1.0; // beta
    double mix_alpha = 1.0;         // Beta(alpha, alpha); 1.0 draws lambda uniformly
    bool swa_enabled = false;
    double swa_start_fraction = 0.75;
    double swa_lr = 5e-4;
    double focal_gamma = 2.0;
    uint64_t seed = 42;

    int32_t effective_pretrain_epochs() const {
        return pretrain_epochs >= 0 ? pretrain_epochs : epochs / 4;
    }

    void validate() const {
        if (n_v <= 0 || n_r <= 0) throw ConfigError("embedding dims must be positive");
        if (model_kind == ModelKind::DistMult && n_v != n_r)
            throw ConfigError("distmult needs n_v == n_r");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (negatives < 1) throw ConfigError("negatives must be >= 1");
        if (!(lr > 0.0)) throw ConfigError("lr must be positive");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
        if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
            throw ConfigError("label_smoothing must be in [0, 1)");
        for (double p : {dropout1, dropout2, dropout3})
            if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rates must be in [0, 1)");
        if (degree_threshold < 0) throw ConfigError("degree_threshold must be >= 0");
        if (method == TrainMethod::KgMixup && synth_per_triple < 1)
            throw ConfigError("synth_per_triple must be >= 1 for kg_mixup");
        if (!(synth_loss_weight >= 0.0)) throw ConfigError("synth_loss_weight must be >= 0");
        if (!(mix_alpha > 0.0)) throw ConfigError("mix_alpha must be positive");
        if (!(swa_start_fraction >= 0.0 && swa_start_fraction <= 1.0))
            throw ConfigError("swa_start_fraction must be in [0, 1]");
        if (!(swa_lr > 0.0)) throw ConfigError("swa_lr must be positive");
        if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be >= 0");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline int32_t parse_i32(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        if (x < INT32_MIN || x > INT32_MAX) throw std::out_of_range("");
        return static_cast<int32_t>(x);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

inline uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return static_cast<uint64_t>(x);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
}

inline double parse_f64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::string format_f64(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

// Flat `key = value` text. '#' starts a comment; blank lines are skipped;
// duplicate keys are rejected.
inline std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                        const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key " + key);
    }
    return kv;
}

inline std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path.string());
}

// Assign one config key. Unknown keys are an error.
inline void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "model_kind") cfg.model_kind = model_kind_from_string(value);
    else if (key == "n_v") cfg.n_v = parse_i32(key, value);
    else if (key == "n_r") cfg.n_r = parse_i32(key, value);
    else if (key == "epochs") cfg.epochs = parse_i32(key, value);
    else if (key == "pretrain_epochs") cfg.pretrain_epochs = parse_i32(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_i32(key, value);
    else if (key == "negatives") cfg.negatives = parse_i32(key, value);
    else if (key == "lr") cfg.lr = parse_f64(key, value);
    else if (key == "lr_decay") cfg.lr_decay = parse_f64(key, value);
    else if (key == "label_smoothing") cfg.label_smoothing = parse_f64(key, value);
    else if (key == "dropout1") cfg.dropout1 = parse_f64(key, value);
    else if (key == "dropout2") cfg.dropout2 = parse_f64(key, value);
    else if (key == "dropout3") cfg.dropout3 = parse_f64(key, value);
    else if (key == "method") cfg.method = train_method_from_string(value);
    else if (key == "degree_threshold") cfg.degree_threshold = parse_i32(key, value);
    else if (key == "synth_per_triple") cfg.synth_per_triple = parse_i32(key, value);
    else if (key == "synth_loss_weight") cfg.synth_loss_weight = parse_f64(key, value);
    else if (key == "mix_alpha") cfg.mix_alpha = parse_f64(key, value);
    else if (key == "swa_enabled") cfg.swa_enabled = parse_bool(key, value);
    else if (key == "swa_start_fraction") cfg.swa_start_fraction = parse_f64(key, value);
    else if (key == "swa_lr") cfg.swa_lr = parse_f64(key, value);
    else if (key == "focal_gamma") cfg.focal_gamma = parse_f64(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else throw ConfigError("unknown config key: " + key);
}

inline TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv) {
    TrainConfig cfg;
    for (const auto& [k, v] : kv) apply_config_key(cfg, k, v);
    return cfg;
}

// Canonical serialization: fixed key order, round-trip-exact numbers. Used
// for the checkpoint config echo and run manifests.
inline std::string to_kv(const TrainConfig& cfg) {
    using detail::format_f64;
    std::ostringstream os;
    os << "model_kind = " << to_string(cfg.model_kind) << '\n'
       << "n_v = " << cfg.n_v << '\n'
       << "n_r = " << cfg.n_r << '\n'
       << "epochs = " << cfg.epochs << '\n'
       << "pretrain_epochs = " << cfg.pretrain_epochs << '\n'
       << "batch_size = " << cfg.batch_size << '\n'
       << "negatives = " << cfg.negatives << '\n'
       << "lr = " << format_f64(cfg.lr) << '\n'
       << "lr_decay = " << format_f64(cfg.lr_decay) << '\n'
       << "label_smoothing = " << format_f64(cfg.label_smoothing) << '\n'
       << "dropout1 = " << format_f64(cfg.dropout1) << '\n'
       << "dropout2 = " << format_f64(cfg.dropout2) << '\n'
       << "dropout3 = " << format_f64(cfg.dropout3) << '\n'
       << "method = " << to_string(cfg.method) << '\n'
       << "degree_threshold = " << cfg.degree_threshold << '\n'
       << "synth_per_triple = " << cfg.synth_per_triple << '\n'
       << "synth_loss_weight = " << format_f64(cfg.synth_loss_weight) << '\n'
       << "mix_alpha = " << format_f64(cfg.mix_alpha) << '\n'
       << "swa_enabled = " << (cfg.swa_enabled ? "true" : "false") << '\n'
       << "swa_start_fraction = " << format_f64(cfg.swa_start_fraction) << '\n'
       << "swa_lr = " << format_f64(cfg.swa_lr) << '\n'
       << "focal_gamma = " << format_f64(cfg.focal_gamma) << '\n'
       << "seed = " << cfg.seed << '\n';
    return os.str();
}

}  // namespace kgmix
