#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "mmff/adamw.hpp"
#include "mmff/param_store.hpp"
#include "mmff/rng.hpp"
#include "mmff/tensor.hpp"

namespace mmff {

struct TrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 8;
    AdamWConfig optimizer;
    std::uint64_t seed = 0;
};

struct StageTrace {
    std::vector<double> epoch_loss;  // mean per-sample training loss
};

// Builds the loss of one sample; `rng` drives train-mode dropout.
using SampleLoss = std::function<Var(std::size_t sample, RngStream& rng)>;

// One pass over `sample_count` samples in a shuffled order, one optimizer
// step per mini-batch on the batch-mean loss. Returns the mean loss.
// Throws NumericError naming `epoch` if a loss is not finite.
double run_epoch(ParamStore& params, AdamW& optimizer, std::size_t sample_count,
                 std::size_t batch_size, std::size_t epoch, RngStream& rng,
                 const SampleLoss& loss);

// Copy of every parameter value in a store, in entry order.
struct ParamSnapshot {
    std::vector<std::vector<double>> values;
};

ParamSnapshot take_snapshot(const ParamStore& params);
// Writes the snapshot back; with a nonempty `prefix` only entries whose
// name starts with it are restored.
void restore_snapshot(ParamStore& params, const ParamSnapshot& snapshot,
                      std::string_view prefix = {});

} // namespace mmff
