#pragma once

#include <cstdint>
#include <vector>

#include "chanfee/network.hpp"
#include "chanfee/rng.hpp"

namespace chanfee {

struct TrafficEntry {
    std::uint32_t count = 0;
    Msat amount = 0;
    double epsilon = 0.0;  // probability that the receiver is a merchant

    friend bool operator==(const TrafficEntry&, const TrafficEntry&) = default;
};

/// Transaction types of one simulation round. Validated on construction.
class TrafficSpec {
public:
    TrafficSpec() = default;
    explicit TrafficSpec(std::vector<TrafficEntry> entries);

    /// Three types of 10 payments each: 10k, 50k and 100k sat, epsilon 0.6.
    static TrafficSpec defaults();

    const std::vector<TrafficEntry>& entries() const { return entries_; }
    std::size_t total_count() const;

    friend bool operator==(const TrafficSpec&, const TrafficSpec&) = default;

private:
    std::vector<TrafficEntry> entries_;
};

struct Transaction {
    Msat amount = 0;
    NodeIndex sender = kNoNode;
    NodeIndex receiver = kNoNode;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// One uniform01() draw picks the branch (merchant with probability
/// epsilon), one below() draw picks the node within the branch. The sender
/// is excluded from both branches; an empty branch falls back to the other.
NodeIndex sample_receiver(NodeIndex sender, const NetworkGraph& g, double epsilon, Rng& rng);

/// Entries in order, `count` transactions each; sender uniform over all
/// nodes, then receiver via sample_receiver.
std::vector<Transaction> generate_transactions(const TrafficSpec& spec, const NetworkGraph& g, Rng& rng);

}  // namespace chanfee
