#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "chanfee/fee.hpp"
#include "chanfee/types.hpp"

namespace chanfee {

/// One row of a channel snapshot. A row describes the policy `source_id`
/// applies when forwarding over `channel_id` towards `target_id`.
struct ChannelRecord {
    NodeId source_id;
    NodeId target_id;
    std::string channel_id;
    std::int64_t capacity = 0;  // sat
    Msat base_fee = 0;
    double fee_rate = 0.0;  // ppm
    Msat min_htlc = 0;
    std::int64_t last_update = 0;  // unix seconds

    friend bool operator==(const ChannelRecord&, const ChannelRecord&) = default;
};

/// An undirected channel after aggregation. endpoints[0] < endpoints[1]
/// lexicographically; balance[i] and policy[i] belong to endpoints[i].
struct PaymentChannel {
    std::array<NodeId, 2> endpoints;
    std::string channel_id;  // original ids joined by '+'
    Msat capacity = 0;
    std::array<Msat, 2> balance{0, 0};
    std::array<FeePolicy, 2> policy;
    Msat min_htlc = 0;
    std::int64_t last_update = 0;

    /// 0 or 1, or -1 when `id` is not an endpoint.
    int side_of(const NodeId& id) const {
        if (endpoints[0] == id) return 0;
        if (endpoints[1] == id) return 1;
        return -1;
    }

    friend bool operator==(const PaymentChannel&, const PaymentChannel&) = default;
};

struct HalfHalf {};

struct UniformRandom {
    std::uint64_t seed = 0;
};

/// Explicit balances keyed by endpoint pair (either order). The value holds
/// the balances of key.first and key.second respectively. Channels that are
/// not listed fall back to HalfHalf.
struct Manual {
    std::map<std::pair<NodeId, NodeId>, std::array<Msat, 2>> balances;
};

using BalanceInitMode = std::variant<HalfHalf, UniformRandom, Manual>;

/// Reads a snapshot in CSV (optional header) or JSON-lines form. See
/// docs/formats.md.
std::vector<ChannelRecord> parse_snapshot(const std::filesystem::path& path);
std::vector<ChannelRecord> parse_snapshot(std::istream& in);

struct MerchantSet {
    std::set<NodeId> ids;
    std::size_t unknown = 0;  // ids absent from the snapshot's node set
};

MerchantSet parse_merchants(const std::filesystem::path& path,
                            const std::unordered_set<NodeId>& known_nodes = {});
MerchantSet parse_merchants(std::istream& in, const std::unordered_set<NodeId>& known_nodes = {});

std::unordered_set<NodeId> node_ids(std::span<const ChannelRecord> records);

/// Collapses all records between the same unordered node pair into one
/// channel: capacities summed over distinct channel ids (sat -> msat),
/// per-direction fee rate and base fee averaged, min_htlc minimised.
/// A direction with no records of its own inherits the other direction's
/// policy. Output is sorted by endpoint pair; balances are zero.
std::vector<PaymentChannel> aggregate_channels(std::span<const ChannelRecord> records);

std::vector<PaymentChannel> init_balances(std::vector<PaymentChannel> channels,
                                          const BalanceInitMode& mode);

/// Two directional records per channel; inverse of aggregate_channels on
/// aggregated input.
std::vector<ChannelRecord> to_records(std::span<const PaymentChannel> channels);

void write_snapshot_csv(std::ostream& out, std::span<const ChannelRecord> records);

}  // namespace chanfee
