#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dlp/data.hpp"
#include "dlp/losses.hpp"
#include "dlp/nets.hpp"

namespace dlp::config {

// Flat key=value store with dotted keys (model.base_channels, loss.mu, ...).
// '#' starts a comment; blank lines ignored.
class Config {
public:
    static Config from_file(const std::filesystem::path& path);
    static Config from_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    // Each override is "key=value"; later entries win. Throws on malformed entries.
    void apply_overrides(const std::vector<std::string>& overrides);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Throwing variant for keys that must be present.
    std::string require(const std::string& key) const;

    // FNV-1a over the sorted key=value lines; stable across insertion order.
    std::string digest() const;

    void save(const std::filesystem::path& path) const;
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

struct TrainConfig {
    int64_t epochs = 200;
    int64_t batch_size = 1;
    double lr = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double init_std = 0.02;
    int64_t buffer_size = 50;
    std::string lr_decay = "none";  // none | linear_after_half
    uint64_t seed = 0;
    int64_t checkpoint_every = 1;
    std::string update_order = "g_then_d";  // g_then_d | d_then_g

    void validate() const;
};

// Typed views over the flat store, applying the documented defaults.
data::PreprocessConfig make_preprocess_config(const Config& c);
nets::GeneratorSpec make_generator_spec(const Config& c);
nets::DiscriminatorSpec make_discriminator_spec(const Config& c);
losses::LossWeights make_loss_weights(const Config& c);
TrainConfig make_train_config(const Config& c);

struct RunManifest {
    std::string command;
    std::string config_digest;
    std::string artifact_version = "1";
    std::string timestamp;  // ISO-8601

    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
};

std::string iso8601_now();

}  // namespace dlp::config
