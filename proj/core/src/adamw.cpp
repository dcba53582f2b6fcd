#include "mmff/adamw.hpp"

#include <cmath>

#include "mmff/error.hpp"

namespace mmff {

void AdamWConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ConfigError("adamw: learning rate must be finite and non-negative");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("adamw: beta1 and beta2 must lie in (0, 1)");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("adamw: eps must be positive");
    }
    if (!(weight_decay >= 0.0)) {
        throw ConfigError("adamw: weight decay must be non-negative");
    }
}

AdamW::AdamW(AdamWConfig config) : config_(config) { config_.validate(); }

void AdamW::step(ParamStore& params) {
    for (const auto& entry : params.entries()) {
        if (!entry.frozen && !entry.var.grad_populated()) {
            throw StateError("adamw: parameter '" + entry.name + "' has no gradient");
        }
    }

    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    const double decay = 1.0 - config_.lr * config_.weight_decay;

    for (auto& entry : params.entries()) {
        if (entry.frozen) {
            continue;
        }
        auto& state = moments_[entry.name];
        const std::size_t n = entry.var.size();
        if (state.first.size() != n) {
            state.first.assign(n, 0.0);
            state.second.assign(n, 0.0);
        }
        auto value = entry.var.mutable_value();
        auto grad = entry.var.grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grad[i];
            state.first[i] = config_.beta1 * state.first[i] + (1.0 - config_.beta1) * g;
            state.second[i] = config_.beta2 * state.second[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = state.first[i] / correction1;
            const double v_hat = state.second[i] / correction2;
            value[i] *= decay;
            value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

const AdamW::Moments* AdamW::moments(const std::string& name) const {
    auto it = moments_.find(name);
    return it == moments_.end() ? nullptr : &it->second;
}

} // namespace mmff
