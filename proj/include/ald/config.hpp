#pragma once

// Plain-text key=value run configuration and the per-dataset presets
// (learning rate / epoch schedules; presets also use the longer sequence cap).

#include "ald/train.hpp"

namespace ald {

inline void apply_aspects_string(ModelConfig& cfg, const std::string& aspects) {
    cfg.use_directed = cfg.use_generalised = cfg.use_explicit = cfg.use_implicit = false;
    std::string token;
    std::istringstream in(aspects);
    while (std::getline(in, token, ',')) {
        if (token == "d") cfg.use_directed = true;
        else if (token == "g") cfg.use_generalised = true;
        else if (token == "e") cfg.use_explicit = true;
        else if (token == "i") cfg.use_implicit = true;
        else if (!token.empty()) throw std::invalid_argument("aspects: unknown aspect '" + token + "' (d,g,e,i)");
    }
}

struct Preset {
    double lr;
    int epochs;
};

inline const std::map<std::string, Preset>& presets() {
    static const std::map<std::string, Preset> table = {
        {"waseem", {4e-4, 6}}, {"hateval", {1e-7, 6}}, {"offeval", {1e-7, 13}}, {"davids", {4e-4, 6}},
        {"founta", {1e-5, 8}}, {"fnuc", {1e-6, 13}},   {"stormw", {1e-6, 7}},
    };
    return table;
}

inline void apply_preset(TrainConfig& cfg, const std::string& name) {
    auto it = presets().find(name);
    if (it == presets().end()) {
        std::string known;
        for (const auto& [k, v] : presets()) known += (known.empty() ? "" : ", ") + k;
        throw std::invalid_argument("preset '" + name + "' unknown (" + known + ")");
    }
    cfg.preset = name;
    cfg.lr = it->second.lr;
    cfg.epochs = it->second.epochs;
    cfg.model.encoder.max_seq_len = 64;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot read " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
            if (blank) continue;
            throw std::runtime_error("config: expected key = value at " + path + ":" + std::to_string(line_no));
        }
        auto trim = [](std::string s) {
            size_t b = 0, e = s.size();
            while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
            while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
            return s.substr(b, e - b);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config: empty key at " + path + ":" + std::to_string(line_no));
        kv[key] = value;
    }
    return kv;
}

inline void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    auto to_int = [&](const std::string& v) { return std::stoi(v); };
    auto to_double = [&](const std::string& v) { return std::stod(v); };
    auto to_bool = [&](const std::string& v) {
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw std::invalid_argument("config: boolean expected for " + key + ", got '" + v + "'");
    };
    if (key == "lr") cfg.lr = to_double(value);
    else if (key == "epochs") cfg.epochs = to_int(value);
    else if (key == "batch_size") cfg.batch_size = to_int(value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "val_fraction") cfg.val_fraction = to_double(value);
    else if (key == "mode") cfg.model.mode = cross_mode_from(value);
    else if (key == "graph") cfg.model.use_graph = to_bool(value);
    else if (key == "fusion_repeats") cfg.model.fusion_repeats = to_int(value);
    else if (key == "aspects") apply_aspects_string(cfg.model, value);
    else if (key == "n_classes") cfg.model.n_classes = to_int(value);
    else if (key == "mlp_hidden") cfg.model.mlp_hidden = to_int(value);
    else if (key == "num_encoders") cfg.model.encoder.num_encoders = to_int(value);
    else if (key == "num_heads") cfg.model.encoder.num_heads = to_int(value);
    else if (key == "hidden_dim") cfg.model.encoder.hidden_dim = to_int(value);
    else if (key == "d_model") cfg.model.encoder.d_model = to_int(value);
    else if (key == "dropout") cfg.model.encoder.dropout_rate = to_double(value);
    else if (key == "max_seq_len") cfg.model.encoder.max_seq_len = to_int(value);
    else if (key == "d_directed") cfg.model.d_directed = to_int(value);
    else if (key == "d_generalised") cfg.model.d_generalised = to_int(value);
    else if (key == "d_explicit") cfg.model.d_explicit = to_int(value);
    else if (key == "d_implicit") cfg.model.d_implicit = to_int(value);
    else if (key == "graph_dim") cfg.model.graph_dim = to_int(value);
    else if (key == "gcn_epochs") cfg.gcn.epochs = to_int(value);
    else if (key == "gcn_lr") cfg.gcn.lr = to_double(value);
    else if (key == "gcn_window") cfg.gcn.window = to_int(value);
    else if (key == "gcn_min_count") cfg.gcn.min_count = to_int(value);
    else if (key == "debias_steps") cfg.debias.steps = to_int(value);
    else if (key == "dict_steps") cfg.dict_embed.steps = to_int(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline void apply_config_file(TrainConfig& cfg, const std::string& path) {
    for (const auto& [key, value] : parse_config_file(path)) apply_config_entry(cfg, key, value);
}

// Resolved-configuration echo, one machine-parsable key=value per line.
inline std::string config_echo(const TrainConfig& cfg, const std::string& gcn_label_source = "") {
    std::ostringstream os;
    os << "config: lr=" << cfg.lr << "\n";
    os << "config: epochs=" << cfg.epochs << "\n";
    os << "config: batch_size=" << cfg.batch_size << "\n";
    os << "config: seed=" << cfg.seed << "\n";
    os << "config: mode=" << cross_mode_name(cfg.model.mode) << "\n";
    os << "config: graph=" << (cfg.model.use_graph ? 1 : 0) << "\n";
    os << "config: fusion_repeats=" << cfg.model.fusion_repeats << "\n";
    os << "config: aspects=" << cfg.model.aspects_string() << "\n";
    os << "config: d_model=" << cfg.model.encoder.d_model << "\n";
    os << "config: num_encoders=" << cfg.model.encoder.num_encoders << "\n";
    os << "config: num_heads=" << cfg.model.encoder.num_heads << "\n";
    os << "config: hidden_dim=" << cfg.model.encoder.hidden_dim << "\n";
    os << "config: dropout=" << cfg.model.encoder.dropout_rate << "\n";
    os << "config: max_seq_len=" << cfg.model.encoder.max_seq_len << "\n";
    os << "config: graph_dim=" << cfg.model.graph_dim << "\n";
    if (!cfg.preset.empty()) os << "config: preset=" << cfg.preset << "\n";
    if (!gcn_label_source.empty()) os << "config: gcn_label_source=" << gcn_label_source << "\n";
    return os.str();
}

} // namespace ald
