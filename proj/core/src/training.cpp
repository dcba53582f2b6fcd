#include "mmff/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmff/error.hpp"

namespace mmff {

double run_epoch(ParamStore& params, AdamW& optimizer, std::size_t sample_count,
                 std::size_t batch_size, std::size_t epoch, RngStream& rng,
                 const SampleLoss& loss) {
    if (sample_count == 0) {
        throw DataError("training: empty dataset");
    }
    if (batch_size == 0) {
        throw ConfigError("training: batch size must be positive");
    }
    std::vector<std::size_t> order(sample_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double total = 0.0;
    for (std::size_t begin = 0; begin < sample_count; begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, sample_count);
        const double weight = 1.0 / static_cast<double>(end - begin);
        params.zero_grad();
        for (std::size_t i = begin; i < end; ++i) {
            Var sample_loss = loss(order[i], rng);
            const double value = sample_loss.item();
            if (!std::isfinite(value)) {
                throw NumericError("training: non-finite loss at epoch " + std::to_string(epoch) +
                                   " (sample " + std::to_string(order[i]) + ")");
            }
            total += value;
            backward(scale(weight, sample_loss));
        }
        optimizer.step(params);
    }
    return total / static_cast<double>(sample_count);
}

ParamSnapshot take_snapshot(const ParamStore& params) {
    ParamSnapshot snap;
    snap.values.reserve(params.size());
    for (const auto& e : params.entries()) {
        snap.values.emplace_back(e.var.value().begin(), e.var.value().end());
    }
    return snap;
}

void restore_snapshot(ParamStore& params, const ParamSnapshot& snapshot, std::string_view prefix) {
    if (snapshot.values.size() != params.size()) {
        throw StateError("snapshot does not match the parameter store");
    }
    auto entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!prefix.empty() && !entries[i].name.starts_with(prefix)) {
            continue;
        }
        auto dst = entries[i].var.mutable_value();
        if (dst.size() != snapshot.values[i].size()) {
            throw StateError("snapshot entry '" + entries[i].name + "' has the wrong size");
        }
        std::copy(snapshot.values[i].begin(), snapshot.values[i].end(), dst.begin());
    }
}

} // namespace mmff
