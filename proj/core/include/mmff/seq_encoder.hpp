#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mmff/nn.hpp"
#include "mmff/param_store.hpp"
#include "mmff/tensor.hpp"
#include "mmff/types.hpp"

namespace mmff {

enum Gate : std::size_t { gate_input = 0, gate_forget = 1, gate_output = 2, gate_candidate = 3 };

struct LstmCellParams {
    std::array<Var, 4> input_weight;      // [h, in] per gate
    std::array<Var, 4> recurrent_weight;  // [h, h] per gate
    std::array<Var, 4> bias;              // [h] per gate
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
};

struct LstmState {
    Var h;
    Var c;
};

// Forget-gate bias starts at 1; everything else uniform in +-1/sqrt(fan_in).
LstmCellParams make_lstm_cell(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                              std::size_t hidden, RngStream& rng);

LstmState zero_lstm_state(std::size_t hidden);

// i,f,o = sigmoid(W x + U h + b), g = tanh(W x + U h + b),
// c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_cell_step(const Var& x, const LstmState& prev, const LstmCellParams& params);

enum Direction : std::size_t { forward_dir = 0, backward_dir = 1 };

struct BiLstmParams {
    std::vector<std::array<LstmCellParams, 2>> layers;  // [layer][direction]
    std::size_t hidden = 0;

    std::size_t output_dim() const { return 2 * hidden; }
};

BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden, std::size_t layers, RngStream& rng);

// Stacked bidirectional LSTM. Each layer emits [h_fwd(t); h_bwd(t)] per
// step; the result is [final forward state; final backward state] of the
// top layer. Train-mode dropout is applied between layers.
Var bilstm_encode(std::span<const Var> sequence, const BiLstmParams& params, Mode mode = Mode::eval,
                  double dropout_rate = 0.0, RngStream* rng = nullptr);

std::vector<Var> frames_as_constants(const Matrix& frames);

inline constexpr std::size_t kDefaultLstmHidden = 32;
inline constexpr std::size_t kDefaultFeatureDim = 64;
inline constexpr std::size_t kDefaultTextMlpWidth = 64;
inline constexpr double kDefaultDropout = 0.5;

struct EncoderConfig {
    Modality modality = Modality::audio;
    std::size_t input_dim = 0;
    std::size_t hidden = kDefaultLstmHidden;
    std::size_t output_dim = kDefaultFeatureDim;
    Activation activation = Activation::elu;
    double dropout = kDefaultDropout;
    std::size_t mlp_depth = 1;
    std::size_t mlp_width = kDefaultTextMlpWidth;

    // Text: ReLU, three-layer MLP with linear output. Audio/video: ELU,
    // single affine + ELU projection.
    static EncoderConfig defaults_for(Modality modality, std::size_t input_dim);
    void validate() const;
};

class ModalityEncoder {
public:
    ModalityEncoder(ParamStore& store, const std::string& prefix, EncoderConfig config,
                    RngStream& rng);

    Var encode(std::span<const Var> sequence, Mode mode, RngStream* rng) const;
    Var encode(const Matrix& frames, Mode mode, RngStream* rng) const;

    const EncoderConfig& config() const { return config_; }
    const BiLstmParams& bilstm() const { return bilstm_; }
    const Mlp& head() const { return head_; }

private:
    EncoderConfig config_;
    BiLstmParams bilstm_;
    Mlp head_;
};

// Sentence-embedding rows -> x_t.
Var encode_text(const ModalityEncoder& encoder, const FrameSequence& sentences,
                Mode mode = Mode::eval, RngStream* rng = nullptr);
// Compressed frames -> x_a or x_v.
Var encode_av(const ModalityEncoder& encoder, const FrameSequence& compressed,
              Mode mode = Mode::eval, RngStream* rng = nullptr);

// Fixed-length encoded vectors for one sample, indexed by Modality.
struct ModalityFeatures {
    std::string sample_id;
    std::array<std::vector<double>, kModalityCount> x;

    const std::vector<double>& operator[](Modality m) const { return x[index_of(m)]; }
    std::vector<double>& operator[](Modality m) { return x[index_of(m)]; }
};

using ModalityVars = std::array<Var, kModalityCount>;

ModalityVars as_constants(const ModalityFeatures& features);

} // namespace mmff
