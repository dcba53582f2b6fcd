#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmff/analysis.hpp"
#include "mmff/checkpoint.hpp"
#include "mmff/config.hpp"
#include "mmff/dataset.hpp"
#include "mmff/fusion.hpp"
#include "mmff/proxy.hpp"
#include "mmff/seq_encoder.hpp"

namespace mmff {

// Encoders, their temporary regression heads, proxy and fusion backbone.
//
// Parameter names:
//   enc.<modality>.bilstm.*, enc.<modality>.mlp.*   sequence encoders
//   pre.<modality>.weight|bias                      stage-0 regression heads
//   proxy.*                                          latent proxy
//   fusion.*                                         fusion backbone
class MmffModel {
public:
    MmffModel(const RunConfig& config, const std::array<std::size_t, kModalityCount>& input_dims);

    const RunConfig& config() const { return config_; }
    const std::array<std::size_t, kModalityCount>& input_dims() const { return input_dims_; }

    const ModalityEncoder& encoder(Modality m) const { return encoders_[index_of(m)]; }
    const Dense& pretrain_head(Modality m) const { return pretrain_heads_[index_of(m)]; }
    ParamStore& encoder_params() { return encoder_params_; }
    const ParamStore& encoder_params() const { return encoder_params_; }
    ProxyModel& proxy() { return proxy_; }
    const ProxyModel& proxy() const { return proxy_; }
    FusionModel& fusion() { return fusion_; }
    const FusionModel& fusion() const { return fusion_; }

    int stage() const { return stage_; }
    void set_stage(int stage) { stage_ = stage; }

    Checkpoint checkpoint() const;
    // Restores every parameter, frozen flag and the stage marker.
    void restore(const Checkpoint& checkpoint);

    // Eval-mode encodings of one sample.
    ModalityFeatures features(const Sample& sample) const;

private:
    RunConfig config_;
    std::array<std::size_t, kModalityCount> input_dims_;
    ParamStore encoder_params_;
    std::vector<ModalityEncoder> encoders_;
    std::array<Dense, kModalityCount> pretrain_heads_;
    ProxyModel proxy_;
    FusionModel fusion_;
    int stage_ = -1;
};

// Input dims of each modality as found in `dataset`.
std::array<std::size_t, kModalityCount> dataset_dims(const Dataset& dataset);

std::vector<ModalityFeatures> encode_dataset(const MmffModel& model, const Dataset& dataset);

struct TrainingReport {
    StageTrace stage0;  // summed loss of the three per-modality regressions
    std::array<std::vector<double>, kModalityCount> stage0_validation;  // index 0 is untrained
    std::array<std::size_t, kModalityCount> stage0_best_epoch{};
    StageTrace stage1;
    BackboneTrace stage2;
};

using StageCallback = std::function<void(int stage, const MmffModel& model)>;

// Stage 0 pretrains the encoders (each with its own regression head) and
// freezes them; stage 1 trains and freezes the proxy on the frozen encoder
// outputs; stage 2 trains the fusion backbone. Stages before `first_stage`
// must already be complete in `model`. `on_stage` runs after each stage.
// With a validation split, a stratified share of `train` is held out of
// stages 0 and 2 and used to keep each encoder's and the backbone's best
// epoch.
TrainingReport train_model(MmffModel& model, const Dataset& train, int first_stage = 0,
                           const StageCallback& on_stage = {});

struct EvaluationResult {
    std::vector<std::string> ids;
    std::vector<double> labels;
    std::vector<double> predictions;
    std::vector<OrderWeightValues> weights;

    MetricsReport metrics() const { return compute_metrics(labels, predictions); }
};

// Eval-mode predictions. A nonempty `orders` subset replaces the fusion by
// its renormalized ablation over those orders.
EvaluationResult evaluate(const MmffModel& model, const Dataset& dataset,
                          std::span<const std::size_t> orders = {});

std::string predictions_csv(const EvaluationResult& result);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t train_samples = 0;
    MetricsReport metrics;
};

// Stratified k-fold cross-validation over `dataset`.
std::vector<FoldResult> cross_validate(const Dataset& dataset, const RunConfig& config);

} // namespace mmff
