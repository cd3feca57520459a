#include "esgmix/adamw.hpp"

#include <cmath>
#include <string>

#include "esgmix/error.hpp"

namespace esgmix {

void adamw_update(std::span<double> params, std::span<const double> grads, AdamWState& state,
                  const AdamWConfig& cfg) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw PreconditionError("adamw_update: parameter, gradient, and state sizes differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grads[i])) throw DataError("adamw_update: non-finite gradient at index " + std::to_string(i));
    }

    const auto t = static_cast<double>(++state.step);
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    const double lr = cfg.learning_rate;
    const double decay = lr * cfg.weight_decay;

    double* p = params.data();
    const double* g = grads.data();
    double* m = state.m.data();
    double* v = state.v.data();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p[i] = p[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon) - decay * p[i];
    }
}

} // namespace esgmix
