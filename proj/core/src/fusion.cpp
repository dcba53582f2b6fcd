#include "mmff/fusion.hpp"

#include "mmff/error.hpp"

namespace mmff {

void FusionConfig::validate() const {
    if (feature_dim == 0 || latent_dim == 0 || factor_hidden == 0 || factor_dim == 0 ||
        head_hidden == 0 || predictor_hidden == 0) {
        throw ConfigError("fusion: dimensions must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("fusion: dropout must lie in [0, 1)");
    }
}

FusionModel::FusionModel(FusionConfig config, RngStream& rng) : config_(config) {
    config_.validate();
    const std::size_t d = config_.feature_dim;
    const std::size_t hf = config_.factor_hidden;
    const std::size_t f = config_.factor_dim;
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        for (Modality m : kModalities) {
            encoders_[k][index_of(m)] = make_dense(
                params_, "fusion.G" + std::to_string(k + 1) + "." + std::string(short_name(m)), d,
                hf, rng);
        }
    }
    for (Modality m : kModalities) {
        first_proj_[index_of(m)] =
            make_matrix(params_, "fusion.P1." + std::string(short_name(m)), f, hf, rng);
    }
    for (std::size_t p = 0; p < kPairs.size(); ++p) {
        const std::string name = std::string(short_name(kPairs[p].first)) +
                                 std::string(short_name(kPairs[p].second));
        pair_proj_[p] = make_matrix(params_, "fusion.P2." + name, f, hf, rng);
    }
    triple_proj_ = make_matrix(params_, "fusion.P3.tav", f, hf, rng);
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        order_proj_[k] = make_matrix(params_, "fusion.Pint." + std::to_string(k + 1), f, f, rng);
    }
    const MlpSpec head_spec{{config_.latent_dim, config_.head_hidden, config_.head_hidden, 3},
                            Activation::relu, Activation::identity, 0.0};
    for (std::size_t h = 0; h < heads_.size(); ++h) {
        const std::string name = h < kOrderCount ? "fusion.H" + std::to_string(h + 1) : "fusion.Hcom";
        heads_[h] = Mlp(params_, name, head_spec, rng);
    }
    predictor_ = Mlp(params_, "fusion.head",
                     MlpSpec{{f, config_.predictor_hidden, config_.predictor_hidden, 1},
                             Activation::relu, Activation::identity, config_.dropout},
                     rng);
}

const Dense& FusionModel::factor_encoder(std::size_t order, Modality m) const {
    if (order < 1 || order > kOrderCount) {
        throw UsageError("factor order must be 1, 2 or 3");
    }
    return encoders_[order - 1][index_of(m)];
}

Var FusionModel::encode_factor(std::size_t order, Modality m, const Var& x, Mode mode,
                               RngStream* rng) const {
    const Dense& g = factor_encoder(order, m);
    if (x.size() != g.in_dim()) {
        throw DimensionError("factor encoder G" + std::to_string(order) + "_" +
                             std::string(short_name(m)) + ": input has " +
                             std::to_string(x.size()) + " dims, expected " +
                             std::to_string(g.in_dim()));
    }
    Var h = activate(g(x), Activation::hardtanh);
    if (mode == Mode::train && config_.dropout > 0.0) {
        if (rng == nullptr) {
            throw UsageError("factor encoder: train-mode dropout needs an rng stream");
        }
        h = dropout(h, config_.dropout, mode, *rng);
    }
    return h;
}

const Var& FusionModel::order_projection(std::size_t order) const {
    if (order < 1 || order > kOrderCount) {
        throw UsageError("factor order must be 1, 2 or 3");
    }
    return order_proj_[order - 1];
}

void FusionModel::set_output_bias(double value) {
    const Dense& last = predictor_.layers().back();
    Var bias = last.bias;
    bias.mutable_value()[0] = value;
}

OrderWeightValues OrderWeightValues::from(const OrderWeights& w) {
    OrderWeightValues out;
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        for (std::size_t m = 0; m < kModalityCount; ++m) {
            out.modality[k][m] = w.modality[k][m];
        }
        out.order[k] = w.order[k];
    }
    return out;
}

namespace {

void require_simplex_shape(const Var& gamma, const char* what) {
    if (!gamma.defined() || gamma.size() != 3) {
        throw DimensionError(std::string(what) + ": weight vector must have 3 entries");
    }
}

Var weighted_factor(std::size_t order, Modality m, const ModalityVars& x, const Var& gamma,
                    const FusionModel& model, Mode mode, RngStream* rng) {
    return scale(element(gamma, index_of(m)),
                 model.encode_factor(order, m, x[index_of(m)], mode, rng));
}

} // namespace

OrderWeights order_weights(const Var& z, const FusionModel& model) {
    if (z.size() != model.config().latent_dim) {
        throw DimensionError("order_weights: proxy has " + std::to_string(z.size()) +
                             " dims, heads expect " + std::to_string(model.config().latent_dim));
    }
    OrderWeights w;
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        w.modality[k] = softmax(model.weight_head(k)(z));
    }
    w.order = softmax(model.weight_head(3)(z));
    return w;
}

std::array<Var, kModalityCount> first_order_factors(const ModalityVars& x, const Var& gamma1,
                                                    const FusionModel& model, Mode mode,
                                                    RngStream* rng) {
    require_simplex_shape(gamma1, "first_order_factors");
    std::array<Var, kModalityCount> out;
    for (Modality m : kModalities) {
        out[index_of(m)] = matmul(model.first_order_projection(m),
                                  weighted_factor(1, m, x, gamma1, model, mode, rng));
    }
    return out;
}

std::array<Var, 3> second_order_factors(const ModalityVars& x, const Var& gamma2,
                                        const FusionModel& model, Mode mode, RngStream* rng) {
    require_simplex_shape(gamma2, "second_order_factors");
    std::array<Var, kModalityCount> branch;
    for (Modality m : kModalities) {
        branch[index_of(m)] = weighted_factor(2, m, x, gamma2, model, mode, rng);
    }
    std::array<Var, 3> out;
    for (std::size_t p = 0; p < kPairs.size(); ++p) {
        Var joint = hadamard(branch[index_of(kPairs[p].first)], branch[index_of(kPairs[p].second)]);
        out[p] = matmul(model.pair_projection(static_cast<Pair>(p)),
                        activate(joint, model.config().factor_activation));
    }
    return out;
}

Var third_order_factor(const ModalityVars& x, const Var& gamma3, const FusionModel& model,
                       Mode mode, RngStream* rng) {
    require_simplex_shape(gamma3, "third_order_factor");
    Var joint = hadamard(hadamard(weighted_factor(3, Modality::text, x, gamma3, model, mode, rng),
                                  weighted_factor(3, Modality::audio, x, gamma3, model, mode, rng)),
                         weighted_factor(3, Modality::video, x, gamma3, model, mode, rng));
    return matmul(model.triple_projection(), activate(joint, model.config().factor_activation));
}

std::array<Var, kOrderCount> integrate_orders(const std::array<Var, kModalityCount>& first,
                                              const std::array<Var, 3>& second, const Var& third,
                                              const FusionModel& model) {
    return {matmul(model.order_projection(1), add(add(first[0], first[1]), first[2])),
            matmul(model.order_projection(2), add(add(second[0], second[1]), second[2])),
            matmul(model.order_projection(3), third)};
}

Var fuse(const std::array<Var, kOrderCount>& integrated, const Var& gamma) {
    require_simplex_shape(gamma, "fuse");
    Var v = scale(element(gamma, 0), integrated[0]);
    v = add(v, scale(element(gamma, 1), integrated[1]));
    return add(v, scale(element(gamma, 2), integrated[2]));
}

Var predict(const Var& v, const FusionModel& model, Mode mode, RngStream* rng) {
    if (v.size() != model.config().factor_dim) {
        throw DimensionError("predict: fused vector has " + std::to_string(v.size()) +
                             " dims, expected " + std::to_string(model.config().factor_dim));
    }
    return model.predictor()(v, mode, rng);
}

FusionOutput fusion_forward(const ModalityVars& x, const Var& z, const FusionModel& model,
                            Mode mode, RngStream* rng) {
    FusionOutput out;
    out.weights = order_weights(z, model);
    FactorSet& f = out.factors;
    f.first = first_order_factors(x, out.weights.modality[0], model, mode, rng);
    f.second = second_order_factors(x, out.weights.modality[1], model, mode, rng);
    f.third = third_order_factor(x, out.weights.modality[2], model, mode, rng);
    f.integrated = integrate_orders(f.first, f.second, f.third, model);
    f.fused = fuse(f.integrated, out.weights.order);
    out.prediction = predict(f.fused, model, mode, rng);
    return out;
}

double backbone_mse(std::span<const BackboneSample> samples, const FusionModel& model) {
    if (samples.empty()) {
        throw DataError("backbone_mse: no samples");
    }
    double total = 0.0;
    for (const auto& s : samples) {
        const double e =
            fusion_forward(as_constants(s.features), Var::constant(s.z), model).prediction.item() -
            s.label;
        total += e * e;
    }
    return total / static_cast<double>(samples.size());
}

BackboneTrace train_backbone(std::span<const BackboneSample> dataset, FusionModel& model,
                             const TrainOptions& options, std::size_t log_interval,
                             std::span<const BackboneSample> validation) {
    if (log_interval == 0) {
        throw ConfigError("train_backbone: logging interval must be positive");
    }
    std::vector<ModalityVars> inputs;
    std::vector<Var> proxies;
    inputs.reserve(dataset.size());
    for (const auto& sample : dataset) {
        inputs.push_back(as_constants(sample.features));
        proxies.push_back(Var::constant(sample.z));
    }

    BackboneTrace trace;
    ParamSnapshot best;
    if (!validation.empty()) {
        trace.validation_loss.push_back(backbone_mse(validation, model));
        best = take_snapshot(model.params());
    }
    AdamW optimizer(options.optimizer);
    RngStream rng(options.seed);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        OrderWeightValues sum{};
        auto loss = [&](std::size_t i, RngStream& r) {
            FusionOutput out = fusion_forward(inputs[i], proxies[i], model, Mode::train, &r);
            const OrderWeightValues w = OrderWeightValues::from(out.weights);
            for (std::size_t k = 0; k < kOrderCount; ++k) {
                for (std::size_t m = 0; m < kModalityCount; ++m) {
                    sum.modality[k][m] += w.modality[k][m];
                }
                sum.order[k] += w.order[k];
            }
            const double label = dataset[i].label;
            return mse_loss(out.prediction, std::span<const double>(&label, 1));
        };
        trace.epoch_loss.push_back(run_epoch(model.params(), optimizer, dataset.size(),
                                             options.batch_size, epoch, rng, loss));
        if ((epoch + 1) % log_interval == 0) {
            const double n = static_cast<double>(dataset.size());
            WeightTraceRow row;
            row.iteration = optimizer.steps();
            for (std::size_t k = 0; k < kOrderCount; ++k) {
                for (std::size_t m = 0; m < kModalityCount; ++m) {
                    row.weights.modality[k][m] = sum.modality[k][m] / n;
                }
                row.weights.order[k] = sum.order[k] / n;
            }
            trace.weights.push_back(row);
        }
        if (!validation.empty()) {
            trace.validation_loss.push_back(backbone_mse(validation, model));
            if (trace.validation_loss.back() < trace.validation_loss[trace.best_epoch]) {
                trace.best_epoch = epoch + 1;
                best = take_snapshot(model.params());
            }
        }
    }
    if (!validation.empty()) {
        restore_snapshot(model.params(), best);
    } else {
        trace.best_epoch = options.epochs;
    }
    return trace;
}

} // namespace mmff
