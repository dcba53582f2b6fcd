#include "mmff/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "mmff/csv.hpp"
#include "mmff/error.hpp"

namespace mmff {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
    std::uint64_t out = 0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                          std::string(value) + "'");
    }
    return out;
}

double parse_real(std::string_view key, std::string_view value) {
    double out = 0.0;
    if (!parse_double(value, out) || !std::isfinite(out)) {
        throw ConfigError("config key '" + std::string(key) + "': expected a finite number, got '" +
                          std::string(value) + "'");
    }
    return out;
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field size_field(const char* key, T RunConfig::*member) {
    return {key,
            [key, member](RunConfig& c, std::string_view v) {
                c.*member = static_cast<T>(parse_unsigned(key, v));
            },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* key, double RunConfig::*member) {
    return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = parse_real(key, v); },
            [member](const RunConfig& c) { return format_number(c.*member); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        size_field("seed", &RunConfig::seed),
        size_field("feature_dim", &RunConfig::feature_dim),
        size_field("latent_dim", &RunConfig::latent_dim),
        size_field("lstm_hidden", &RunConfig::lstm_hidden),
        size_field("factor_hidden", &RunConfig::factor_hidden),
        size_field("factor_dim", &RunConfig::factor_dim),
        size_field("proxy_hidden", &RunConfig::proxy_hidden),
        size_field("head_hidden", &RunConfig::head_hidden),
        real_field("dropout", &RunConfig::dropout),
        real_field("lr", &RunConfig::lr),
        real_field("weight_decay", &RunConfig::weight_decay),
        size_field("epochs_stage0", &RunConfig::epochs_stage0),
        size_field("epochs_stage1", &RunConfig::epochs_stage1),
        size_field("epochs_stage2", &RunConfig::epochs_stage2),
        size_field("batch_size", &RunConfig::batch_size),
        size_field("log_interval", &RunConfig::log_interval),
        size_field("kfold", &RunConfig::kfold),
        real_field("validation_split", &RunConfig::validation_split),
        real_field("beta", &RunConfig::beta),
        size_field("target_len_audio", &RunConfig::target_len_audio),
        size_field("target_len_video", &RunConfig::target_len_video),
        size_field("samples", &RunConfig::samples),
        size_field("test_samples", &RunConfig::test_samples),
        {"dominant_modality",
         [](RunConfig& c, std::string_view v) {
             if (v == "none" || v.empty()) {
                 c.dominant_modality.reset();
                 return;
             }
             try {
                 c.dominant_modality = parse_modality(v);
             } catch (const UsageError& e) {
                 throw ConfigError(std::string("config key 'dominant_modality': ") + e.what());
             }
         },
         [](const RunConfig& c) {
             return c.dominant_modality ? std::string(to_string(*c.dominant_modality))
                                        : std::string("none");
         }},
        real_field("noise", &RunConfig::noise),
    };
    return table;
}

} // namespace

void RunConfig::validate() const {
    auto positive = [](const char* key, std::size_t v) {
        if (v == 0) {
            throw ConfigError(std::string("config key '") + key + "' must be positive");
        }
    };
    positive("feature_dim", feature_dim);
    positive("latent_dim", latent_dim);
    positive("lstm_hidden", lstm_hidden);
    positive("factor_hidden", factor_hidden);
    positive("factor_dim", factor_dim);
    positive("proxy_hidden", proxy_hidden);
    positive("head_hidden", head_hidden);
    positive("batch_size", batch_size);
    positive("log_interval", log_interval);
    positive("samples", samples);
    if (latent_dim >= feature_dim) {
        throw ConfigError("config: latent_dim (" + std::to_string(latent_dim) +
                          ") must be smaller than feature_dim (" + std::to_string(feature_dim) + ")");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("config key 'dropout' must lie in [0, 1)");
    }
    if (!(lr >= 0.0)) {
        throw ConfigError("config key 'lr' must be non-negative");
    }
    if (!(weight_decay >= 0.0)) {
        throw ConfigError("config key 'weight_decay' must be non-negative");
    }
    if (!(beta >= 0.0)) {
        throw ConfigError("config key 'beta' must be non-negative");
    }
    if (target_len_audio < 3 || target_len_video < 3) {
        throw ConfigError("config: target lengths must be at least 3");
    }
    if (kfold == 1) {
        throw ConfigError("config key 'kfold' must be 0 (off) or at least 2");
    }
    if (!(validation_split >= 0.0 && validation_split <= 0.5)) {
        throw ConfigError("config key 'validation_split' must lie in [0, 0.5]");
    }
    if (!(noise >= 0.0)) {
        throw ConfigError("config key 'noise' must be non-negative");
    }
}

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(*this, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

RunConfig RunConfig::parse(std::string_view text, std::string_view origin) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(number) +
                              ": expected 'key = value'");
        }
        try {
            cfg.set(trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    return parse(read_text_file(path), path.string());
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) {
        out += std::string(f.key) + " = " + f.get(*this) + "\n";
    }
    return out;
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) {
        out.emplace_back(f.key);
    }
    return out;
}

} // namespace mmff
