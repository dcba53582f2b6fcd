#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmff/param_store.hpp"
#include "mmff/rng.hpp"
#include "mmff/tensor.hpp"

namespace mmff {

// Weights and biases drawn uniformly from +-1/sqrt(fan_in).
std::vector<double> uniform_init(std::size_t count, std::size_t fan_in, RngStream& rng);

struct Dense {
    Var weight;  // [out, in]
    Var bias;    // [out]

    std::size_t in_dim() const { return weight.shape()[1]; }
    std::size_t out_dim() const { return weight.shape()[0]; }
    Var operator()(const Var& x) const { return affine(weight, x, bias); }
};

// Registers `<prefix>.weight` and `<prefix>.bias`.
Dense make_dense(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                 RngStream& rng);

// Registers a bias-free [rows, cols] matrix.
Var make_matrix(ParamStore& store, const std::string& name, std::size_t rows, std::size_t cols,
                RngStream& rng);

struct MlpSpec {
    std::vector<std::size_t> widths;  // input, hidden..., output
    Activation hidden = Activation::relu;
    Activation output = Activation::identity;
    double dropout = 0.0;  // after each hidden activation, train mode only
};

class Mlp {
public:
    Mlp() = default;
    Mlp(ParamStore& store, const std::string& prefix, MlpSpec spec, RngStream& rng);

    Var operator()(const Var& x, Mode mode = Mode::eval, RngStream* rng = nullptr) const;

    const std::vector<Dense>& layers() const { return layers_; }
    const MlpSpec& spec() const { return spec_; }
    std::size_t in_dim() const { return spec_.widths.front(); }
    std::size_t out_dim() const { return spec_.widths.back(); }

private:
    MlpSpec spec_;
    std::vector<Dense> layers_;
};

} // namespace mmff
