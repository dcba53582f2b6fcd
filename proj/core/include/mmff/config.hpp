#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmff/types.hpp"

namespace mmff {

// Every setting of a run. Text form is `key = value` per line, `#` starts a
// comment; to_text() emits all keys in a fixed order.
struct RunConfig {
    std::uint64_t seed = 0;

    // model sizes
    std::size_t feature_dim = 64;    // d
    std::size_t latent_dim = 16;     // r
    std::size_t lstm_hidden = 32;    // h
    std::size_t factor_hidden = 32;  // h_f
    std::size_t factor_dim = 32;     // f
    std::size_t proxy_hidden = 32;
    std::size_t head_hidden = 32;
    double dropout = 0.5;

    // optimization
    double lr = 1e-3;
    double weight_decay = 0.01;
    std::size_t epochs_stage0 = 40;
    std::size_t epochs_stage1 = 60;
    std::size_t epochs_stage2 = 80;
    std::size_t batch_size = 8;
    std::size_t log_interval = 1;
    std::size_t kfold = 0;  // 0 disables cross-validation
    // Fraction of the training split held out to pick the best stage-0 and
    // stage-2 epochs; 0 trains on everything and keeps the last epoch.
    double validation_split = 0.0;

    // preprocessing
    double beta = 0.01;
    std::size_t target_len_audio = 600;
    std::size_t target_len_video = 1200;

    // synthetic data
    std::size_t samples = 64;
    std::size_t test_samples = 0;
    std::optional<Modality> dominant_modality;
    double noise = 1.0;

    // Throws ConfigError naming the offending key.
    void validate() const;

    // Applies one `key = value` assignment. Throws ConfigError.
    void set(std::string_view key, std::string_view value);
    static RunConfig parse(std::string_view text, std::string_view origin = "config");
    static RunConfig load(const std::filesystem::path& path);

    std::string to_text() const;
    static std::vector<std::string> keys();
};

} // namespace mmff
