#include "mmff/proxy.hpp"

#include "mmff/error.hpp"

namespace mmff {

void ProxyConfig::validate() const {
    if (feature_dim == 0 || latent_dim == 0 || hidden == 0) {
        throw ConfigError("proxy: dimensions must be positive");
    }
    if (latent_dim >= feature_dim) {
        throw ConfigError("proxy: latent dim r=" + std::to_string(latent_dim) +
                          " must be smaller than feature dim d=" + std::to_string(feature_dim));
    }
}

ProxyModel::ProxyModel(ProxyConfig config, RngStream& rng) : config_(config) {
    config_.validate();
    for (Modality m : kModalities) {
        const std::string mod(to_string(m));
        encoders_[index_of(m)] =
            Mlp(params_, "proxy.enc." + mod,
                MlpSpec{{config_.feature_dim, config_.hidden, config_.latent_dim},
                        Activation::tanh, Activation::tanh, 0.0},
                rng);
        decoders_[index_of(m)] =
            Mlp(params_, "proxy.dec." + mod,
                MlpSpec{{config_.latent_dim, config_.hidden, config_.feature_dim},
                        Activation::tanh, Activation::identity, 0.0},
                rng);
    }
}

LatentProxy combine_embeddings(const std::array<Var, kModalityCount>& y) {
    for (const Var& v : y) {
        if (v.shape() != y[0].shape()) {
            throw DimensionError("proxy: modality embeddings differ in shape");
        }
    }
    LatentProxy proxy;
    proxy.y = y;
    proxy.z = scale(1.0 / 3.0, add(add(y[0], y[1]), y[2]));
    return proxy;
}

LatentProxy proxy_encode(const ModalityVars& x, const ProxyModel& model) {
    std::array<Var, kModalityCount> y;
    for (Modality m : kModalities) {
        const Var& xm = x[index_of(m)];
        if (xm.size() != model.config().feature_dim) {
            throw DimensionError("proxy_encode: " + std::string(to_string(m)) + " feature has " +
                                 std::to_string(xm.size()) + " dims, expected " +
                                 std::to_string(model.config().feature_dim));
        }
        y[index_of(m)] = model.encoder(m)(xm);
    }
    return combine_embeddings(y);
}

Var latent_reconstruction_loss(const ModalityVars& reconstructed, const ModalityVars& x) {
    Var total;
    for (Modality m : kModalities) {
        const Var& target = x[index_of(m)];
        const Var& pred = reconstructed[index_of(m)];
        Var term;
        if (target.requires_grad()) {
            const Var diff = sub(pred, target);
            term = mean(hadamard(diff, diff));
        } else {
            term = mse_loss(pred, target.value());
        }
        total = total.defined() ? add(total, term) : term;
    }
    return scale(1.0 / 3.0, total);
}

Var latent_loss(const ModalityVars& x, const ProxyModel& model) {
    LatentProxy proxy = proxy_encode(x, model);
    ModalityVars reconstructed;
    for (Modality m : kModalities) {
        reconstructed[index_of(m)] = model.decoder(m)(proxy.z);
    }
    return latent_reconstruction_loss(reconstructed, x);
}

StageTrace train_latent_stage(std::span<const ModalityFeatures> dataset, ProxyModel& model,
                              const TrainOptions& options) {
    StageTrace trace;
    if (options.epochs > 0) {
        std::vector<ModalityVars> inputs;
        inputs.reserve(dataset.size());
        for (const auto& features : dataset) {
            inputs.push_back(as_constants(features));
        }
        AdamW optimizer(options.optimizer);
        RngStream rng(options.seed);
        for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
            trace.epoch_loss.push_back(run_epoch(
                model.params(), optimizer, inputs.size(), options.batch_size, epoch, rng,
                [&](std::size_t i, RngStream&) { return latent_loss(inputs[i], model); }));
        }
    }
    model.params().freeze_all();
    return trace;
}

std::vector<double> latent_vector(const ModalityFeatures& features, const ProxyModel& model) {
    LatentProxy proxy = proxy_encode(as_constants(features), model);
    return {proxy.z.value().begin(), proxy.z.value().end()};
}

} // namespace mmff
