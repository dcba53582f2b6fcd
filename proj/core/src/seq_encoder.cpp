#include "mmff/seq_encoder.hpp"

#include "mmff/error.hpp"

namespace mmff {

namespace {
constexpr std::array<const char*, 4> kGateNames{"i", "f", "o", "g"};
}

LstmCellParams make_lstm_cell(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                              std::size_t hidden, RngStream& rng) {
    if (input_dim == 0 || hidden == 0) {
        throw ConfigError("lstm cell '" + prefix + "' needs positive dimensions");
    }
    LstmCellParams cell;
    cell.input_dim = input_dim;
    cell.hidden = hidden;
    for (std::size_t g = 0; g < 4; ++g) {
        const std::string gate = prefix + ".W" + kGateNames[g];
        cell.input_weight[g] =
            store.add(gate, Shape{hidden, input_dim}, uniform_init(hidden * input_dim, input_dim, rng));
        cell.recurrent_weight[g] = store.add(prefix + ".U" + kGateNames[g], Shape{hidden, hidden},
                                             uniform_init(hidden * hidden, hidden, rng));
        std::vector<double> bias = g == gate_forget ? std::vector<double>(hidden, 1.0)
                                                    : uniform_init(hidden, hidden, rng);
        cell.bias[g] = store.add(prefix + ".b" + kGateNames[g], Shape{hidden}, std::move(bias));
    }
    return cell;
}

LstmState zero_lstm_state(std::size_t hidden) {
    return {Var::constant(std::vector<double>(hidden, 0.0)),
            Var::constant(std::vector<double>(hidden, 0.0))};
}

LstmState lstm_cell_step(const Var& x, const LstmState& prev, const LstmCellParams& params) {
    if (x.rank() != 1 || x.size() != params.input_dim) {
        throw DimensionError("lstm_cell_step: input shape " + shape_string(x.shape()) +
                             ", expected [" + std::to_string(params.input_dim) + "]");
    }
    if (prev.h.size() != params.hidden || prev.c.size() != params.hidden) {
        throw DimensionError("lstm_cell_step: state size does not match hidden size " +
                             std::to_string(params.hidden));
    }
    std::array<Var, 4> gates;
    for (std::size_t g = 0; g < 4; ++g) {
        Var pre = add(affine(params.input_weight[g], x, params.bias[g]),
                      matmul(params.recurrent_weight[g], prev.h));
        gates[g] = activate(pre, g == gate_candidate ? Activation::tanh : Activation::sigmoid);
    }
    Var c = add(hadamard(gates[gate_forget], prev.c), hadamard(gates[gate_input], gates[gate_candidate]));
    Var h = hadamard(gates[gate_output], activate(c, Activation::tanh));
    return {h, c};
}

BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden, std::size_t layers, RngStream& rng) {
    if (layers == 0) {
        throw ConfigError("bilstm '" + prefix + "' needs at least one layer");
    }
    BiLstmParams params;
    params.hidden = hidden;
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string base = prefix + ".l" + std::to_string(l);
        params.layers.push_back({make_lstm_cell(store, base + ".fwd", in, hidden, rng),
                                 make_lstm_cell(store, base + ".bwd", in, hidden, rng)});
        in = 2 * hidden;
    }
    return params;
}

Var bilstm_encode(std::span<const Var> sequence, const BiLstmParams& params, Mode mode,
                  double dropout_rate, RngStream* rng) {
    if (sequence.empty()) {
        throw DataError("bilstm_encode: empty sequence");
    }
    const std::size_t steps = sequence.size();
    std::vector<Var> inputs(sequence.begin(), sequence.end());
    Var final_fwd;
    Var final_bwd;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        std::vector<Var> fwd(steps);
        std::vector<Var> bwd(steps);
        LstmState state = zero_lstm_state(params.hidden);
        for (std::size_t t = 0; t < steps; ++t) {
            state = lstm_cell_step(inputs[t], state, layer[forward_dir]);
            fwd[t] = state.h;
        }
        final_fwd = state.h;
        state = zero_lstm_state(params.hidden);
        for (std::size_t t = steps; t-- > 0;) {
            state = lstm_cell_step(inputs[t], state, layer[backward_dir]);
            bwd[t] = state.h;
        }
        final_bwd = state.h;

        if (l + 1 < params.layers.size()) {
            const bool drop = mode == Mode::train && dropout_rate > 0.0;
            if (drop && rng == nullptr) {
                throw UsageError("bilstm_encode: train-mode dropout needs an rng stream");
            }
            for (std::size_t t = 0; t < steps; ++t) {
                Var joined = concat({fwd[t], bwd[t]});
                inputs[t] = drop ? dropout(joined, dropout_rate, mode, *rng) : joined;
            }
        }
    }
    return concat({final_fwd, final_bwd});
}

std::vector<Var> frames_as_constants(const Matrix& frames) {
    std::vector<Var> out;
    out.reserve(frames.rows);
    for (std::size_t r = 0; r < frames.rows; ++r) {
        auto row = frames.row(r);
        out.push_back(Var::constant(std::vector<double>(row.begin(), row.end())));
    }
    return out;
}

EncoderConfig EncoderConfig::defaults_for(Modality modality, std::size_t input_dim) {
    EncoderConfig cfg;
    cfg.modality = modality;
    cfg.input_dim = input_dim;
    if (modality == Modality::text) {
        cfg.activation = Activation::relu;
        cfg.mlp_depth = 3;
    } else {
        cfg.activation = Activation::elu;
        cfg.mlp_depth = 1;
    }
    return cfg;
}

void EncoderConfig::validate() const {
    if (input_dim == 0 || hidden == 0 || output_dim == 0 || mlp_depth == 0 || mlp_width == 0) {
        throw ConfigError("encoder (" + std::string(to_string(modality)) +
                          "): dimensions must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("encoder: dropout must lie in [0, 1)");
    }
}

ModalityEncoder::ModalityEncoder(ParamStore& store, const std::string& prefix, EncoderConfig config,
                                 RngStream& rng)
    : config_(config) {
    config_.validate();
    bilstm_ = make_bilstm(store, prefix + ".bilstm", config_.input_dim, config_.hidden, 2, rng);
    MlpSpec spec;
    spec.widths.push_back(bilstm_.output_dim());
    for (std::size_t i = 1; i < config_.mlp_depth; ++i) {
        spec.widths.push_back(config_.mlp_width);
    }
    spec.widths.push_back(config_.output_dim);
    spec.hidden = config_.activation;
    // A single-layer projection carries the modality activation itself;
    // deeper stacks end in a linear layer.
    spec.output = config_.mlp_depth == 1 ? config_.activation : Activation::identity;
    spec.dropout = config_.dropout;
    head_ = Mlp(store, prefix + ".mlp", spec, rng);
}

Var ModalityEncoder::encode(std::span<const Var> sequence, Mode mode, RngStream* rng) const {
    for (const Var& step : sequence) {
        if (step.size() != config_.input_dim) {
            throw DimensionError("encoder (" + std::string(to_string(config_.modality)) +
                                 "): frame has " + std::to_string(step.size()) +
                                 " dims, expected " + std::to_string(config_.input_dim));
        }
    }
    Var pooled = bilstm_encode(sequence, bilstm_, mode, config_.dropout, rng);
    return head_(pooled, mode, rng);
}

Var ModalityEncoder::encode(const Matrix& frames, Mode mode, RngStream* rng) const {
    const auto steps = frames_as_constants(frames);
    return encode(steps, mode, rng);
}

Var encode_text(const ModalityEncoder& encoder, const FrameSequence& sentences, Mode mode,
                RngStream* rng) {
    if (encoder.config().modality != Modality::text) {
        throw UsageError("encode_text: encoder is configured for " +
                         std::string(to_string(encoder.config().modality)));
    }
    if (sentences.length() == 0) {
        throw DataError("encode_text: sample '" + sentences.sample_id + "' has no sentences");
    }
    return encoder.encode(sentences.frames, mode, rng);
}

Var encode_av(const ModalityEncoder& encoder, const FrameSequence& compressed, Mode mode,
              RngStream* rng) {
    if (encoder.config().modality == Modality::text) {
        throw UsageError("encode_av: encoder is configured for text");
    }
    if (compressed.length() == 0) {
        throw DataError("encode_av: sample '" + compressed.sample_id + "' has no frames");
    }
    return encoder.encode(compressed.frames, mode, rng);
}

ModalityVars as_constants(const ModalityFeatures& features) {
    ModalityVars out;
    for (Modality m : kModalities) {
        out[index_of(m)] = Var::constant(features[m]);
    }
    return out;
}

} // namespace mmff
