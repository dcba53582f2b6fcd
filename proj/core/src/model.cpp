#include "mmff/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmff/csv.hpp"
#include "mmff/error.hpp"

namespace mmff {

namespace {

enum Stream : std::uint64_t {
    stream_encoders = 1,
    stream_proxy = 2,
    stream_fusion = 3,
    stream_train = 100,
};

ProxyConfig proxy_config(const RunConfig& c) {
    return ProxyConfig{c.feature_dim, c.latent_dim, c.proxy_hidden};
}

FusionConfig fusion_config(const RunConfig& c) {
    FusionConfig f;
    f.feature_dim = c.feature_dim;
    f.latent_dim = c.latent_dim;
    f.factor_hidden = c.factor_hidden;
    f.factor_dim = c.factor_dim;
    f.head_hidden = c.head_hidden;
    f.predictor_hidden = c.head_hidden;
    f.dropout = c.dropout;
    return f;
}

TrainOptions stage_options(const RunConfig& c, int stage, std::size_t epochs) {
    TrainOptions o;
    o.epochs = epochs;
    o.batch_size = c.batch_size;
    o.optimizer.lr = c.lr;
    o.optimizer.weight_decay = c.weight_decay;
    o.seed = RngStream(c.seed).fork(stream_train + static_cast<std::uint64_t>(stage)).seed();
    return o;
}

double mean_label(const Dataset& ds) {
    const auto labels = ds.labels();
    return std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(labels.size());
}

Var encode_sample(const ModalityEncoder& encoder, const FrameSequence& seq, Mode mode,
                  RngStream* rng) {
    return seq.modality == Modality::text ? encode_text(encoder, seq, mode, rng)
                                          : encode_av(encoder, seq, mode, rng);
}

} // namespace

MmffModel::MmffModel(const RunConfig& config,
                     const std::array<std::size_t, kModalityCount>& input_dims)
    : config_(config),
      input_dims_(input_dims),
      proxy_([&] {
          config.validate();
          RngStream rng = RngStream(config.seed).fork(stream_proxy);
          return ProxyModel(proxy_config(config), rng);
      }()),
      fusion_([&] {
          RngStream rng = RngStream(config.seed).fork(stream_fusion);
          return FusionModel(fusion_config(config), rng);
      }()) {
    RngStream rng = RngStream(config_.seed).fork(stream_encoders);
    encoders_.reserve(kModalityCount);
    for (Modality m : kModalities) {
        if (input_dims_[index_of(m)] == 0) {
            throw DataError(std::string(to_string(m)) + " input has no dimensions");
        }
        EncoderConfig ec = EncoderConfig::defaults_for(m, input_dims_[index_of(m)]);
        ec.hidden = config_.lstm_hidden;
        ec.output_dim = config_.feature_dim;
        ec.dropout = config_.dropout;
        encoders_.emplace_back(encoder_params_, "enc." + std::string(to_string(m)), ec, rng);
    }
    for (Modality m : kModalities) {
        pretrain_heads_[index_of(m)] = make_dense(
            encoder_params_, "pre." + std::string(to_string(m)), config_.feature_dim, 1, rng);
    }
}

Checkpoint MmffModel::checkpoint() const {
    Checkpoint ck;
    ck.stage = stage_;
    append_store(ck, encoder_params_);
    append_store(ck, proxy_.params());
    append_store(ck, fusion_.params());
    return ck;
}

void MmffModel::restore(const Checkpoint& checkpoint) {
    const std::size_t expected =
        encoder_params_.size() + proxy_.params().size() + fusion_.params().size();
    if (checkpoint.arrays.size() != expected) {
        throw FormatError("checkpoint holds " + std::to_string(checkpoint.arrays.size()) +
                          " arrays, model has " + std::to_string(expected));
    }
    restore_store(checkpoint, encoder_params_);
    restore_store(checkpoint, proxy_.params());
    restore_store(checkpoint, fusion_.params());
    stage_ = checkpoint.stage;
}

ModalityFeatures MmffModel::features(const Sample& sample) const {
    ModalityFeatures f;
    f.sample_id = sample.id;
    for (Modality m : kModalities) {
        Var x = encode_sample(encoder(m), sample[m], Mode::eval, nullptr);
        f[m].assign(x.value().begin(), x.value().end());
    }
    return f;
}

std::array<std::size_t, kModalityCount> dataset_dims(const Dataset& dataset) {
    std::array<std::size_t, kModalityCount> dims{};
    for (Modality m : kModalities) {
        dims[index_of(m)] = dataset.dims(m);
    }
    return dims;
}

std::vector<ModalityFeatures> encode_dataset(const MmffModel& model, const Dataset& dataset) {
    std::vector<ModalityFeatures> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        out.push_back(model.features(s));
    }
    return out;
}

TrainingReport train_model(MmffModel& model, const Dataset& train, int first_stage,
                           const StageCallback& on_stage) {
    if (first_stage < 0 || first_stage > 2) {
        throw UsageError("training stage must be 0, 1 or 2");
    }
    if (model.stage() < first_stage - 1) {
        throw StateError("cannot start at stage " + std::to_string(first_stage) +
                         ": model has completed stage " + std::to_string(model.stage()));
    }
    if (train.size() == 0) {
        throw DataError("training split is empty");
    }
    if (dataset_dims(train) != model.input_dims()) {
        throw DataError("training data dims do not match the model inputs");
    }
    const RunConfig& cfg = model.config();
    const double label_mean = mean_label(train);
    TrainingReport report;

    std::vector<std::size_t> fit;
    std::vector<std::size_t> held;
    if (cfg.validation_split > 0.0) {
        const auto k = static_cast<std::size_t>(
            std::max(2.0, std::round(1.0 / cfg.validation_split)));
        const auto folds = stratified_folds(train.labels(), k);
        for (std::size_t i = 0; i < train.size(); ++i) {
            (folds[i] == k - 1 ? held : fit).push_back(i);
        }
    } else {
        fit.resize(train.size());
        std::iota(fit.begin(), fit.end(), std::size_t{0});
    }

    if (first_stage <= 0) {
        for (Modality m : kModalities) {
            Var bias = model.pretrain_head(m).bias;
            bias.mutable_value()[0] = label_mean;
        }
        auto held_loss = [&](Modality m) {
            double total = 0.0;
            for (std::size_t i : held) {
                const Sample& s = train.samples[i];
                const double e =
                    model.pretrain_head(m)(encode_sample(model.encoder(m), s[m], Mode::eval, nullptr))
                        .item() -
                    s.label;
                total += e * e;
            }
            return total / static_cast<double>(held.size());
        };
        std::array<ParamSnapshot, kModalityCount> best;
        auto track = [&](std::size_t epochs_done) {
            if (held.empty()) {
                return;
            }
            for (Modality m : kModalities) {
                auto& trace = report.stage0_validation[index_of(m)];
                trace.push_back(held_loss(m));
                auto& best_epoch = report.stage0_best_epoch[index_of(m)];
                if (epochs_done == 0 || trace.back() < trace[best_epoch]) {
                    best_epoch = epochs_done;
                    best[index_of(m)] = take_snapshot(model.encoder_params());
                }
            }
        };

        const TrainOptions opt = stage_options(cfg, 0, cfg.epochs_stage0);
        AdamW optimizer(opt.optimizer);
        RngStream rng(opt.seed);
        auto loss = [&](std::size_t i, RngStream& r) {
            const Sample& s = train.samples[fit[i]];
            Var total;
            for (Modality m : kModalities) {
                Var x = encode_sample(model.encoder(m), s[m], Mode::train, &r);
                Var term = mse_loss(model.pretrain_head(m)(x), std::span<const double>(&s.label, 1));
                total = total.defined() ? add(total, term) : term;
            }
            return total;
        };
        track(0);
        for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
            report.stage0.epoch_loss.push_back(run_epoch(model.encoder_params(), optimizer,
                                                         fit.size(), opt.batch_size, epoch, rng,
                                                         loss));
            track(epoch + 1);
        }
        if (!held.empty()) {
            for (Modality m : kModalities) {
                const std::string name(to_string(m));
                restore_snapshot(model.encoder_params(), best[index_of(m)], "enc." + name + ".");
                restore_snapshot(model.encoder_params(), best[index_of(m)], "pre." + name + ".");
            }
        } else {
            report.stage0_best_epoch.fill(opt.epochs);
        }
        model.encoder_params().freeze_all();
        model.set_stage(0);
        if (on_stage) on_stage(0, model);
    }

    const std::vector<ModalityFeatures> features = encode_dataset(model, train);

    if (first_stage <= 1) {
        report.stage1 =
            train_latent_stage(features, model.proxy(), stage_options(cfg, 1, cfg.epochs_stage1));
        model.set_stage(1);
        if (on_stage) on_stage(1, model);
    }

    auto backbone = [&](const std::vector<std::size_t>& indices) {
        std::vector<BackboneSample> out;
        out.reserve(indices.size());
        for (std::size_t i : indices) {
            out.push_back(BackboneSample{features[i], latent_vector(features[i], model.proxy()),
                                        train.samples[i].label});
        }
        return out;
    };
    model.fusion().set_output_bias(label_mean);
    report.stage2 = train_backbone(backbone(fit), model.fusion(),
                                   stage_options(cfg, 2, cfg.epochs_stage2), cfg.log_interval,
                                   backbone(held));
    model.set_stage(2);
    if (on_stage) on_stage(2, model);
    return report;
}

EvaluationResult evaluate(const MmffModel& model, const Dataset& dataset,
                          std::span<const std::size_t> orders) {
    if (dataset.size() == 0) {
        throw DataError("evaluation split is empty");
    }
    if (dataset_dims(dataset) != model.input_dims()) {
        throw DataError("evaluation data dims do not match the model inputs");
    }
    EvaluationResult result;
    for (const auto& s : dataset.samples) {
        const ModalityFeatures f = model.features(s);
        const ModalityVars x = as_constants(f);
        const LatentProxy proxy = proxy_encode(x, model.proxy());
        const FusionOutput out = fusion_forward(x, proxy.z, model.fusion(), Mode::eval, nullptr);
        double prediction = out.prediction.item();
        if (!orders.empty()) {
            const auto gamma = out.weights.order.value();
            const AblationSpec spec = ablate_orders(gamma, orders);
            std::array<std::vector<double>, kOrderCount> integrated;
            for (std::size_t k = 0; k < kOrderCount; ++k) {
                const auto v = out.factors.integrated[k].value();
                integrated[k].assign(v.begin(), v.end());
            }
            prediction =
                predict(Var::constant(ablated_fuse(integrated, spec)), model.fusion()).item();
        }
        if (!std::isfinite(prediction)) {
            throw NumericError("non-finite prediction for sample '" + s.id + "'");
        }
        result.ids.push_back(s.id);
        result.labels.push_back(s.label);
        result.predictions.push_back(prediction);
        result.weights.push_back(OrderWeightValues::from(out.weights));
    }
    return result;
}

std::string predictions_csv(const EvaluationResult& result) {
    std::string out = "sample_id,label,prediction\n";
    for (std::size_t i = 0; i < result.ids.size(); ++i) {
        out += result.ids[i] + ',' + format_number(result.labels[i]) + ',' +
               format_number(result.predictions[i]) + '\n';
    }
    return out;
}

std::vector<FoldResult> cross_validate(const Dataset& dataset, const RunConfig& config) {
    const auto labels = dataset.labels();
    const auto folds = stratified_folds(labels, config.kfold);
    const auto dims = dataset_dims(dataset);
    std::vector<FoldResult> results;
    for (std::size_t k = 0; k < config.kfold; ++k) {
        Dataset train{dataset.split + "-train" + std::to_string(k), {}};
        Dataset held{dataset.split + "-fold" + std::to_string(k), {}};
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            (folds[i] == k ? held : train).samples.push_back(dataset.samples[i]);
        }
        MmffModel model(config, dims);
        train_model(model, train);
        results.push_back(FoldResult{k, train.size(), evaluate(model, held).metrics()});
    }
    return results;
}

} // namespace mmff
