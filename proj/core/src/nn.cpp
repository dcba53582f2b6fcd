#include "mmff/nn.hpp"

#include <cmath>

#include "mmff/error.hpp"

namespace mmff {

std::vector<double> uniform_init(std::size_t count, std::size_t fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> values(count);
    for (double& v : values) {
        v = rng.uniform(-bound, bound);
    }
    return values;
}

Dense make_dense(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                 RngStream& rng) {
    if (in == 0 || out == 0) {
        throw ConfigError("dense layer '" + prefix + "' needs positive dimensions");
    }
    Dense layer;
    layer.weight = store.add(prefix + ".weight", Shape{out, in}, uniform_init(out * in, in, rng));
    layer.bias = store.add(prefix + ".bias", Shape{out}, uniform_init(out, in, rng));
    return layer;
}

Var make_matrix(ParamStore& store, const std::string& name, std::size_t rows, std::size_t cols,
                RngStream& rng) {
    if (rows == 0 || cols == 0) {
        throw ConfigError("matrix '" + name + "' needs positive dimensions");
    }
    return store.add(name, Shape{rows, cols}, uniform_init(rows * cols, cols, rng));
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, MlpSpec spec, RngStream& rng)
    : spec_(std::move(spec)) {
    if (spec_.widths.size() < 2) {
        throw ConfigError("mlp '" + prefix + "' needs at least an input and an output width");
    }
    for (std::size_t i = 0; i + 1 < spec_.widths.size(); ++i) {
        layers_.push_back(make_dense(store, prefix + ".l" + std::to_string(i), spec_.widths[i],
                                     spec_.widths[i + 1], rng));
    }
}

Var Mlp::operator()(const Var& x, Mode mode, RngStream* rng) const {
    Var h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i](h);
        const bool last = i + 1 == layers_.size();
        h = activate(h, last ? spec_.output : spec_.hidden);
        if (!last && mode == Mode::train && spec_.dropout > 0.0) {
            if (rng == nullptr) {
                throw UsageError("mlp: train-mode dropout needs an rng stream");
            }
            h = dropout(h, spec_.dropout, mode, *rng);
        }
    }
    return h;
}

} // namespace mmff
