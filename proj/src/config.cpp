#include "dlp/config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dlp::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void parse_line(Config& c, const std::string& raw, int line_no, const std::string& origin) {
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": expected key=value, got \"" + trim(raw) + "\"");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    c.set(key, trim(line.substr(eq + 1)));
}

}  // namespace

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path.string());
}

Config Config::from_string(const std::string& text, const std::string& origin) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) parse_line(c, line, ++line_no, origin);
    return c;
}

void Config::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error("override must be key=value, got \"" + ov + "\"");
        std::string key = trim(ov.substr(0, eq));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        values_[key] = trim(ov.substr(eq + 1));
    }
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t pos = 0;
        int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key " + key + " is not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key " + key + " is not a number: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: key " + key + " is not a boolean: " + v);
}

std::string Config::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("config: missing required key " + key);
    return it->second;
}

std::string Config::digest() const {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : values_) {  // std::map iterates in sorted key order
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Config::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path.string());
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (lr <= 0) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
        throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    if (init_std < 0) throw std::invalid_argument("TrainConfig: init_std must be >= 0");
    if (buffer_size < 0) throw std::invalid_argument("TrainConfig: buffer_size must be >= 0");
    if (lr_decay != "none" && lr_decay != "linear_after_half")
        throw std::invalid_argument("TrainConfig: unknown lr_decay " + lr_decay);
    if (checkpoint_every < 1)
        throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
    if (update_order != "g_then_d" && update_order != "d_then_g")
        throw std::invalid_argument("TrainConfig: unknown update_order " + update_order);
}

data::PreprocessConfig make_preprocess_config(const Config& c) {
    data::PreprocessConfig p;
    p.base_size = static_cast<int>(c.get_int("data.base_size", p.base_size));
    p.expand_size = static_cast<int>(c.get_int("data.expand_size", p.expand_size));
    p.crop_size = static_cast<int>(c.get_int("data.crop_size", p.crop_size));
    p.hflip_prob = c.get_double("data.hflip_prob", p.hflip_prob);
    p.validate();
    return p;
}

nets::GeneratorSpec make_generator_spec(const Config& c) {
    nets::GeneratorSpec s;
    s.base_channels = c.get_int("model.base_channels", s.base_channels);
    s.n_residual_blocks_f = c.get_int("model.n_residual_blocks_f", s.n_residual_blocks_f);
    s.n_residual_blocks_g = c.get_int("model.n_residual_blocks_g", s.n_residual_blocks_g);
    s.dense_layers = c.get_int("model.dense_layers", s.dense_layers);
    s.dense_growth = c.get_int("model.dense_growth", s.dense_growth);
    s.norm_kind = c.get_string("model.norm_kind", s.norm_kind);
    s.output_activation = c.get_string("model.output_activation", s.output_activation);
    s.validate();
    return s;
}

nets::DiscriminatorSpec make_discriminator_spec(const Config& c) {
    nets::DiscriminatorSpec s;
    s.base_channels = c.get_int("model.discriminator.base_channels", s.base_channels);
    s.n_down_layers = c.get_int("model.discriminator.n_down_layers", s.n_down_layers);
    s.kernel = c.get_int("model.discriminator.kernel", s.kernel);
    s.activation = c.get_string("model.discriminator.activation", s.activation);
    s.validate();
    return s;
}

losses::LossWeights make_loss_weights(const Config& c) {
    losses::LossWeights w;
    w.lambda_gan = c.get_double("loss.lambda_gan", w.lambda_gan);
    w.lambda_dual = c.get_double("loss.lambda_dual", w.lambda_dual);
    w.lambda_id = c.get_double("loss.lambda_id", w.lambda_id);
    w.mu = c.get_double("loss.mu", w.mu);
    w.use_feature = c.get_bool("loss.use_feature", w.use_feature);
    w.use_semantic = c.get_bool("loss.use_semantic", w.use_semantic);
    w.use_identity = c.get_bool("loss.use_identity", w.use_identity);
    w.validate();
    return w;
}

TrainConfig make_train_config(const Config& c) {
    TrainConfig t;
    t.epochs = c.get_int("train.epochs", t.epochs);
    t.batch_size = c.get_int("train.batch_size", t.batch_size);
    t.lr = c.get_double("train.lr", t.lr);
    t.adam_beta1 = c.get_double("train.adam_beta1", t.adam_beta1);
    t.adam_beta2 = c.get_double("train.adam_beta2", t.adam_beta2);
    t.init_std = c.get_double("train.init_std", t.init_std);
    t.buffer_size = c.get_int("train.buffer_size", t.buffer_size);
    t.lr_decay = c.get_string("train.lr_decay", t.lr_decay);
    t.seed = static_cast<uint64_t>(c.get_int("seed", static_cast<int64_t>(t.seed)));
    t.checkpoint_every = c.get_int("train.checkpoint_every", t.checkpoint_every);
    t.update_order = c.get_string("train.update_order", t.update_order);
    t.validate();
    return t;
}

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config_digest"] = config_digest;
    j["artifact_version"] = artifact_version;
    j["timestamp"] = timestamp;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.artifact_version = j.at("artifact_version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    return m;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace dlp::config
