#include <algorithm>
#include <cmath>
#include <thread>

#include "esgmix/backends.hpp"
#include "esgmix/error.hpp"
#include "esgmix/random.hpp"

namespace esgmix {

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry, double unit_draw) const {
    const double base = static_cast<double>(initial_delay.count()) * std::pow(factor, std::max(0, retry - 1));
    const double capped = std::min(base, static_cast<double>(max_delay.count()));
    const double scaled = capped * (1.0 - jitter * std::clamp(unit_draw, 0.0, 1.0));
    return std::chrono::milliseconds(static_cast<long long>(std::llround(scaled)));
}

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string call_with_retries(const std::string& backend, const RetryPolicy& policy, const Sleeper& sleep,
                              std::uint64_t jitter_seed, const std::function<std::string()>& attempt) {
    Rng jitter(jitter_seed);
    const int attempts = 1 + std::max(0, policy.max_retries);
    std::string last;
    for (int i = 1; i <= attempts; ++i) {
        try {
            return attempt();
        } catch (const TransientError& e) {
            last = e.what();
            if (i == attempts) break;
            sleep(policy.delay_before_retry(i, jitter.uniform()));
        }
    }
    throw BackendError(BackendError::Reason::retries_exhausted, backend,
                       "retry budget exhausted after " + std::to_string(attempts) + " attempt(s); last error: " + last);
}

} // namespace esgmix
