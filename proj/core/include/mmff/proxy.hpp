#pragma once

// Shared latent proxy: each modality vector is mapped into a common
// low-dimensional subspace, the three embeddings are averaged into z, and
// per-modality decoders reconstruct every modality from z.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mmff/nn.hpp"
#include "mmff/param_store.hpp"
#include "mmff/seq_encoder.hpp"
#include "mmff/training.hpp"

namespace mmff {

inline constexpr std::size_t kDefaultLatentDim = 16;
inline constexpr std::size_t kDefaultProxyHidden = 32;

struct ProxyConfig {
    std::size_t feature_dim = kDefaultFeatureDim;  // d
    std::size_t latent_dim = kDefaultLatentDim;    // r, must be < d
    std::size_t hidden = kDefaultProxyHidden;

    void validate() const;
};

class ProxyModel {
public:
    ProxyModel(ProxyConfig config, RngStream& rng);

    const ProxyConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Two-layer Tanh MLP, d -> hidden -> r.
    const Mlp& encoder(Modality m) const { return encoders_[index_of(m)]; }
    // Tanh hidden layer, linear output, r -> hidden -> d.
    const Mlp& decoder(Modality m) const { return decoders_[index_of(m)]; }

private:
    ProxyConfig config_;
    ParamStore params_;
    std::array<Mlp, kModalityCount> encoders_;
    std::array<Mlp, kModalityCount> decoders_;
};

struct LatentProxy {
    Var z;
    std::array<Var, kModalityCount> y;
};

// z = (y_t + y_a + y_v) / 3 with y_mod = F_mod(x_mod).
LatentProxy combine_embeddings(const std::array<Var, kModalityCount>& y);
LatentProxy proxy_encode(const ModalityVars& x, const ProxyModel& model);

// (1/3) * sum over modalities of the coordinate-mean squared error.
Var latent_reconstruction_loss(const ModalityVars& reconstructed, const ModalityVars& x);
Var latent_loss(const ModalityVars& x, const ProxyModel& model);

// Minimizes the mean latent loss, then freezes every proxy parameter.
StageTrace train_latent_stage(std::span<const ModalityFeatures> dataset, ProxyModel& model,
                              const TrainOptions& options);

std::vector<double> latent_vector(const ModalityFeatures& features, const ProxyModel& model);

} // namespace mmff
