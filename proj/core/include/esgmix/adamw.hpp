#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace esgmix {

/// Adam with decoupled weight decay.
struct AdamWConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

/// First and second moment estimates plus the step counter t.
struct AdamWState {
    AdamWState() = default;
    explicit AdamWState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
};

/// One step, elementwise, in place:
///
///   t += 1
///   m = b1*m + (1-b1)*g
///   v = b2*v + (1-b2)*g^2
///   p = p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps) - lr*wd*p
///
/// The decay term uses p from before the step. Throws DataError on a
/// non-finite gradient and PreconditionError on a size mismatch, leaving
/// everything untouched.
void adamw_update(std::span<double> params, std::span<const double> grads, AdamWState& state,
                  const AdamWConfig& cfg);

} // namespace esgmix
