#pragma once

#include "graphrag/error.hpp"

#include <chrono>
#include <thread>

namespace graphrag {

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
};

// Calls fn(), retrying only on TransportError with exponential backoff.
// Any other exception propagates immediately.
template <typename Fn>
auto call_with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= policy.attempts) throw;
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) *
                                                                   policy.multiplier));
    }
}

}  // namespace graphrag
