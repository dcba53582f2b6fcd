#include "mmff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mmff/error.hpp"
#include "mmff/rng.hpp"

namespace mmff {

void SynthConfig::validate() const {
    if (samples == 0) {
        throw ConfigError("synth: sample count must be positive");
    }
    if (latent_dim == 0 || label_dims == 0 || label_dims > latent_dim) {
        throw ConfigError("synth: need 0 < label_dims <= latent_dim");
    }
    if (dominant && label_dims == latent_dim) {
        throw ConfigError("synth: a dominant modality needs latent_dim > label_dims");
    }
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        if (dims[m] == 0 || min_length[m] == 0 || min_length[m] > max_length[m]) {
            throw ConfigError("synth: " + std::string(to_string(kModalities[m])) +
                              " needs positive dims and 0 < min_length <= max_length");
        }
    }
    if (noise_rank == 0) {
        throw ConfigError("synth: noise rank must be positive");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw ConfigError("synth: noise scale must be finite and non-negative");
    }
}

namespace {

struct ModalityMap {
    Matrix a;  // [K, latent]
    std::vector<double> c;
    Matrix b;  // [K, noise_rank]
};

struct Generator {
    std::array<ModalityMap, kModalityCount> maps;
    std::vector<double> label_weight;
};

Generator make_generator(const SynthConfig& cfg) {
    RngStream rng = RngStream(cfg.seed).fork(1);
    Generator g;
    for (Modality m : kModalities) {
        const std::size_t k = cfg.dims[index_of(m)];
        const bool reads_label = !cfg.dominant || *cfg.dominant == m;
        const std::size_t first = reads_label ? 0 : cfg.label_dims;
        const double a_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim - first));
        ModalityMap& map = g.maps[index_of(m)];
        map.a = Matrix(k, cfg.latent_dim);
        map.b = Matrix(k, cfg.noise_rank);
        map.c.resize(k);
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t j = first; j < cfg.latent_dim; ++j) {
                map.a(r, j) = a_scale * rng.normal();
            }
            double norm = 0.0;
            for (std::size_t j = 0; j < cfg.noise_rank; ++j) {
                map.b(r, j) = rng.normal();
                norm += map.b(r, j) * map.b(r, j);
            }
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < cfg.noise_rank; ++j) {
                map.b(r, j) = norm > 0.0 ? map.b(r, j) / norm : 0.0;
            }
            map.c[r] = rng.uniform(-1.0, 1.0);
        }
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < cfg.label_dims; ++j) {
        g.label_weight.push_back(rng.normal());
        norm += g.label_weight.back() * g.label_weight.back();
    }
    norm = std::sqrt(norm);
    for (double& w : g.label_weight) {
        w = norm > 0.0 ? w / norm : 1.0;
    }
    return g;
}

std::uint64_t split_stream(std::string_view split) {
    if (split == "train") return 2;
    if (split == "test") return 3;
    if (split == "val") return 4;
    throw UsageError("synth: unknown split '" + std::string(split) + "' (train|val|test)");
}

FrameSequence make_sequence(const SynthConfig& cfg, const ModalityMap& map, Modality m,
                            std::span<const double> u, RngStream& rng) {
    const std::size_t mi = index_of(m);
    const std::size_t length =
        cfg.min_length[mi] + rng.below(cfg.max_length[mi] - cfg.min_length[mi] + 1);
    const std::size_t dead = m == Modality::text ? 0 : cfg.dead_dims;
    const std::size_t k = cfg.dims[mi];

    std::vector<double> signal(map.c);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t j = 0; j < u.size(); ++j) {
            signal[r] += map.a(r, j) * u[j];
        }
    }
    std::vector<double> dead_values(dead);
    for (double& v : dead_values) {
        v = rng.uniform();
    }

    const std::size_t raw_len = length + kSmoothingWindow - 1;
    Matrix white(raw_len, cfg.noise_rank);
    for (double& v : white.data) {
        v = rng.normal();
    }

    FrameSequence seq;
    seq.modality = m;
    seq.frames = Matrix(length, k + dead);
    std::vector<double> smooth(cfg.noise_rank);
    for (std::size_t t = 0; t < length; ++t) {
        std::fill(smooth.begin(), smooth.end(), 0.0);
        for (std::size_t w = 0; w < kSmoothingWindow; ++w) {
            for (std::size_t j = 0; j < cfg.noise_rank; ++j) {
                smooth[j] += white(t + w, j);
            }
        }
        for (double& s : smooth) {
            s /= static_cast<double>(kSmoothingWindow);
        }
        for (std::size_t r = 0; r < k; ++r) {
            double v = signal[r];
            for (std::size_t j = 0; j < cfg.noise_rank; ++j) {
                v += cfg.noise * map.b(r, j) * smooth[j];
            }
            seq.frames(t, r) = v;
        }
        for (std::size_t r = 0; r < dead; ++r) {
            seq.frames(t, k + r) = dead_values[r];
        }
        if (m == Modality::text) {
            double norm = 0.0;
            for (double v : seq.frames.row(t)) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& v : seq.frames.row(t)) {
                    v /= norm;
                }
            }
        }
    }
    return seq;
}

} // namespace

Dataset synth_dataset(const SynthConfig& config, std::string_view split) {
    config.validate();
    const Generator gen = make_generator(config);
    const std::size_t count = split == "train" ? config.samples : config.test_samples;
    const RngStream base = RngStream(config.seed).fork(split_stream(split));

    Dataset ds;
    ds.split = std::string(split);
    ds.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng = base.fork(i);
        std::vector<double> u(config.latent_dim);
        for (double& v : u) {
            v = rng.normal();
        }
        double score = 0.0;
        for (std::size_t j = 0; j < config.label_dims; ++j) {
            score += gen.label_weight[j] * u[j];
        }
        char id[32];
        std::snprintf(id, sizeof(id), "%s%04zu", split == "train" ? "s" : split == "test" ? "t" : "v",
                      i);
        Sample s;
        s.id = id;
        s.label = std::clamp(kLabelCenter + kLabelScale * score, kLabelMin, kLabelMax);
        for (Modality m : kModalities) {
            RngStream mrng = rng.fork(10 + index_of(m));
            s[m] = make_sequence(config, gen.maps[index_of(m)], m, u, mrng);
            s[m].sample_id = s.id;
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void synth_generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    save_dataset(synth_dataset(config, "train"), out_dir);
    if (config.test_samples > 0) {
        save_dataset(synth_dataset(config, "test"), out_dir);
    }
}

} // namespace mmff
