#pragma once

// Multi-order factor fusion.
//
// The latent proxy z drives four softmax heads: gamma^k (k = 1, 2, 3)
// weights the modalities inside order k, gamma weights the orders.
//
//   v1_m   = P_m^T  G1_m(x_m) * gamma1_m                           (m in t,a,v)
//   v2_pq  = P_pq^T sigma(gamma2_p G2_p(x_p) o gamma2_q G2_q(x_q))  (ta, av, tv)
//   v3_tav = P_tav^T sigma(gamma3_t G3_t(x_t) o gamma3_a G3_a(x_a) o gamma3_v G3_v(x_v))
//   v^1 = P_1^T sum v1_m,  v^2 = P_2^T sum v2_pq,  v^3 = P_3^T v3_tav
//   v   = gamma_1 v^1 + gamma_2 v^2 + gamma_3 v^3
//   y   = MLP(v)
//
// G encoders are single affine layers with Hardtanh; sigma defaults to Tanh.
// Projection matrices are stored already transposed, shape [f, in].

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mmff/nn.hpp"
#include "mmff/param_store.hpp"
#include "mmff/seq_encoder.hpp"
#include "mmff/training.hpp"

namespace mmff {

inline constexpr std::size_t kDefaultFactorHidden = 32;  // h_f
inline constexpr std::size_t kDefaultFactorDim = 32;     // f
inline constexpr std::size_t kDefaultHeadHidden = 32;
inline constexpr std::size_t kOrderCount = 3;

struct FusionConfig {
    std::size_t feature_dim = kDefaultFeatureDim;  // d
    std::size_t latent_dim = 16;                   // r
    std::size_t factor_hidden = kDefaultFactorHidden;
    std::size_t factor_dim = kDefaultFactorDim;
    std::size_t head_hidden = kDefaultHeadHidden;
    std::size_t predictor_hidden = kDefaultHeadHidden;
    double dropout = kDefaultDropout;
    // sigma of the 2nd/3rd-order factors. Identity exposes the exact
    // multilinear structure for testing.
    Activation factor_activation = Activation::tanh;

    void validate() const;
};

enum Pair : std::size_t { pair_ta = 0, pair_av = 1, pair_tv = 2 };
inline constexpr std::array<std::pair<Modality, Modality>, 3> kPairs{
    std::pair{Modality::text, Modality::audio}, std::pair{Modality::audio, Modality::video},
    std::pair{Modality::text, Modality::video}};

class FusionModel {
public:
    FusionModel(FusionConfig config, RngStream& rng);

    const FusionConfig& config() const { return config_; }
    FusionConfig& mutable_config() { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // order is 1, 2 or 3.
    const Dense& factor_encoder(std::size_t order, Modality m) const;
    Var encode_factor(std::size_t order, Modality m, const Var& x, Mode mode, RngStream* rng) const;

    const Var& first_order_projection(Modality m) const { return first_proj_[index_of(m)]; }
    const Var& pair_projection(Pair p) const { return pair_proj_[p]; }
    const Var& triple_projection() const { return triple_proj_; }
    const Var& order_projection(std::size_t order) const;

    // head 0..2 -> gamma^1..gamma^3, head 3 -> gamma over orders.
    const Mlp& weight_head(std::size_t head) const { return heads_.at(head); }
    const Mlp& predictor() const { return predictor_; }

    // Starts the regression output at a given level, e.g. the label mean.
    void set_output_bias(double value);

private:
    FusionConfig config_;
    ParamStore params_;
    std::array<std::array<Dense, kModalityCount>, kOrderCount> encoders_;
    std::array<Var, kModalityCount> first_proj_;
    std::array<Var, 3> pair_proj_;
    Var triple_proj_;
    std::array<Var, kOrderCount> order_proj_;
    std::array<Mlp, 4> heads_;
    Mlp predictor_;
};

struct OrderWeights {
    std::array<Var, kOrderCount> modality;  // gamma^1..gamma^3 over (t, a, v)
    Var order;                              // gamma over orders (1, 2, 3)
};

// Plain-value snapshot of OrderWeights.
struct OrderWeightValues {
    std::array<std::array<double, kModalityCount>, kOrderCount> modality{};
    std::array<double, kOrderCount> order{};

    static OrderWeightValues from(const OrderWeights& w);
};

OrderWeights order_weights(const Var& z, const FusionModel& model);

std::array<Var, kModalityCount> first_order_factors(const ModalityVars& x, const Var& gamma1,
                                                    const FusionModel& model,
                                                    Mode mode = Mode::eval,
                                                    RngStream* rng = nullptr);
// Returned in Pair order: ta, av, tv.
std::array<Var, 3> second_order_factors(const ModalityVars& x, const Var& gamma2,
                                        const FusionModel& model, Mode mode = Mode::eval,
                                        RngStream* rng = nullptr);
Var third_order_factor(const ModalityVars& x, const Var& gamma3, const FusionModel& model,
                       Mode mode = Mode::eval, RngStream* rng = nullptr);

std::array<Var, kOrderCount> integrate_orders(const std::array<Var, kModalityCount>& first,
                                              const std::array<Var, 3>& second, const Var& third,
                                              const FusionModel& model);

Var fuse(const std::array<Var, kOrderCount>& integrated, const Var& gamma);

Var predict(const Var& v, const FusionModel& model, Mode mode = Mode::eval,
            RngStream* rng = nullptr);

struct FactorSet {
    std::array<Var, kModalityCount> first;
    std::array<Var, 3> second;
    Var third;
    std::array<Var, kOrderCount> integrated;
    Var fused;
};

struct FusionOutput {
    OrderWeights weights;
    FactorSet factors;
    Var prediction;
};

FusionOutput fusion_forward(const ModalityVars& x, const Var& z, const FusionModel& model,
                            Mode mode = Mode::eval, RngStream* rng = nullptr);

// Inputs of the fusion stage: frozen encoder outputs, frozen proxy and label.
struct BackboneSample {
    ModalityFeatures features;
    std::vector<double> z;
    double label = 0.0;
};

struct WeightTraceRow {
    std::uint64_t iteration = 0;  // optimizer steps taken so far
    OrderWeightValues weights;    // dataset mean over the epoch
};

struct BackboneTrace {
    std::vector<double> epoch_loss;
    std::vector<WeightTraceRow> weights;
    std::vector<double> validation_loss;  // index 0 is before training
    std::size_t best_epoch = 0;           // epochs completed at the kept parameters
};

// Eval-mode mean squared prediction error.
double backbone_mse(std::span<const BackboneSample> samples, const FusionModel& model);

// Minimizes the mean squared prediction error over every fusion parameter.
// One weight row is logged every `log_interval` epochs. With a nonempty
// `validation` set the parameters with the lowest validation error
// (including the untrained ones) are kept.
BackboneTrace train_backbone(std::span<const BackboneSample> dataset, FusionModel& model,
                             const TrainOptions& options, std::size_t log_interval = 1,
                             std::span<const BackboneSample> validation = {});

} // namespace mmff
