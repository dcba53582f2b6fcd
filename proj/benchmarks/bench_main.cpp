#include <benchmark/benchmark.h>

#include "mmff/fusion.hpp"
#include "mmff/param_store.hpp"
#include "mmff/preprocess.hpp"
#include "mmff/proxy.hpp"
#include "mmff/seq_encoder.hpp"

using namespace mmff;

namespace {

Matrix noise(RngStream& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.normal();
    return m;
}

// Column scales decay geometrically, as in correlated feature streams.
Matrix features(RngStream& rng, std::size_t rows, std::size_t cols) {
    Matrix m = noise(rng, rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 1.0;
        for (double& x : m.row(r)) {
            x *= s;
            s *= 0.8;
        }
    }
    return m;
}

void BM_BiLstmForwardBackward(benchmark::State& state) {
    const auto steps = static_cast<std::size_t>(state.range(0));
    RngStream rng(1);
    ParamStore store;
    const BiLstmParams params = make_bilstm(store, "b", 16, 32, 2, rng);
    const std::vector<Var> seq = frames_as_constants(noise(rng, steps, 16));
    const std::vector<double> target(64, 0.1);
    for (auto _ : state) {
        store.zero_grad();
        const Var loss = mse_loss(bilstm_encode(seq, params), target);
        backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_BiLstmForwardBackward)->Arg(24)->Arg(96);

void BM_FusionForward(benchmark::State& state) {
    RngStream rng(2);
    FusionModel model(FusionConfig{}, rng);
    ModalityVars x;
    for (auto& v : x) {
        v = Var::constant(std::vector<double>(model.config().feature_dim, 0.3));
    }
    const Var z = Var::constant(std::vector<double>(model.config().latent_dim, 0.1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fusion_forward(x, z, model).prediction.item());
    }
}
BENCHMARK(BM_FusionForward);

void BM_CompressSequence(benchmark::State& state) {
    const auto frames = static_cast<std::size_t>(state.range(0));
    RngStream rng(3);
    FrameSequence seq;
    seq.frames = features(rng, frames, 40);
    const PrincipalAxis axis = first_principal_component(seq.frames);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compress_sequence(seq, axis, kDefaultAudioTargetLength).length());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames));
}
BENCHMARK(BM_CompressSequence)->Arg(6000)->Arg(30000);

void BM_PrincipalComponent(benchmark::State& state) {
    RngStream rng(4);
    const Matrix pooled = features(rng, static_cast<std::size_t>(state.range(0)), 40);
    for (auto _ : state) {
        benchmark::DoNotOptimize(first_principal_component(pooled).eigenvalue);
    }
}
BENCHMARK(BM_PrincipalComponent)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
