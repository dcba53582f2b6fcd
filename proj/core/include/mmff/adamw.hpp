#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmff/param_store.hpp"

namespace mmff {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    void validate() const;
};

// Adam with decoupled weight decay:
//   p <- p * (1 - lr * wd)
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
// Frozen parameters are skipped entirely, moments included.
class AdamW {
public:
    explicit AdamW(AdamWConfig config = {});

    // Throws StateError if a non-frozen parameter has no populated gradient.
    void step(ParamStore& params);

    const AdamWConfig& config() const { return config_; }
    std::uint64_t steps() const { return step_; }

    struct Moments {
        std::vector<double> first;
        std::vector<double> second;
    };
    const Moments* moments(const std::string& name) const;

private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::unordered_map<std::string, Moments> moments_;
};

} // namespace mmff
