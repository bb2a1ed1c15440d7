#pragma once

#include <cmath>

#include "chanfee/types.hpp"

namespace chanfee {

/// Directional forwarding policy of one endpoint of a channel.
/// fee_rate is in proportional millionths (ppm) of the forwarded amount.
struct FeePolicy {
    double fee_rate = 0.0;
    Msat base_fee = 0;

    friend bool operator==(const FeePolicy&, const FeePolicy&) = default;
};

/// Rounds half away from zero for non-negative inputs (half-up).
inline Msat round_half_up(double x) { return static_cast<Msat>(std::floor(x + 0.5)); }

/// round(fee_rate * amount / 1e6) + base_fee.
inline Msat compute_fee(const FeePolicy& policy, Msat amount) {
    return round_half_up(policy.fee_rate * static_cast<double>(amount) / 1e6) + policy.base_fee;
}

}  // namespace chanfee
