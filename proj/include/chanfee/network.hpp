#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "chanfee/fee.hpp"
#include "chanfee/snapshot.hpp"
#include "chanfee/types.hpp"

namespace chanfee {

/// A node's view of one incident channel.
struct Incidence {
    ChannelIndex channel;
    NodeIndex peer;
    std::uint8_t side;  // the node's own side of the channel
};

/// Indexed form of PaymentChannel; ends[0] < ends[1].
struct Channel {
    std::array<NodeIndex, 2> ends;
    Msat capacity = 0;
    std::array<Msat, 2> balance{0, 0};
    std::array<FeePolicy, 2> policy;
    Msat min_htlc = 0;
    std::string channel_id;
    std::int64_t last_update = 0;
};

/// Per-channel membership flags (the simulator's "active channels").
class ChannelSet {
public:
    ChannelSet() = default;
    explicit ChannelSet(std::size_t channel_count, bool all = false) : flags_(channel_count, all ? 1 : 0) {}

    static ChannelSet of(std::size_t channel_count, std::span<const ChannelIndex> members) {
        ChannelSet s(channel_count);
        for (auto c : members) s.flags_.at(c) = 1;
        return s;
    }

    bool contains(ChannelIndex c) const { return c < flags_.size() && flags_[c] != 0; }
    void insert(ChannelIndex c) { flags_.at(c) = 1; }
    std::size_t capacity() const { return flags_.size(); }

private:
    std::vector<std::uint8_t> flags_;
};

/// Node and channel tables of a (possibly localized) network.
///
/// Nodes are indexed in ascending id order, so comparing indices compares
/// ids lexicographically. Topology and capacities are fixed after
/// construction; balances and fee policies can be mutated.
class NetworkGraph {
public:
    NetworkGraph() = default;

    /// Nodes are the channel endpoints plus `extra_nodes`. Merchant ids that
    /// are not nodes are counted in unknown_merchants().
    NetworkGraph(std::span<const PaymentChannel> channels, const std::set<NodeId>& merchants,
                 std::span<const NodeId> extra_nodes = {});

    std::size_t node_count() const { return ids_.size(); }
    std::size_t channel_count() const { return channels_.size(); }

    const NodeId& id(NodeIndex n) const { return ids_.at(n); }
    std::span<const NodeId> ids() const { return ids_; }
    std::optional<NodeIndex> find(const NodeId& id) const;
    NodeIndex at(const NodeId& id) const;  // throws UnknownCenter

    const Channel& channel(ChannelIndex c) const { return channels_[c]; }
    std::span<const Channel> channels() const { return channels_; }

    /// Incident channels of `n`, sorted by peer index.
    std::span<const Incidence> incident(NodeIndex n) const {
        return {incidence_.data() + offsets_[n], incidence_.data() + offsets_[n + 1]};
    }

    bool is_merchant(NodeIndex n) const { return merchant_flag_[n] != 0; }
    std::span<const NodeIndex> merchants() const { return merchants_; }
    std::span<const NodeIndex> non_merchants() const { return non_merchants_; }
    std::size_t unknown_merchants() const { return unknown_merchants_; }

    Msat balance(ChannelIndex c, int side) const { return channels_[c].balance[side]; }
    const FeePolicy& policy(ChannelIndex c, int side) const { return channels_[c].policy[side]; }
    void set_policy(ChannelIndex c, int side, const FeePolicy& p) { channels_[c].policy[side] = p; }

    /// Sets side 0's balance; side 1 receives the remainder of the capacity.
    void set_balance(ChannelIndex c, int side, Msat amount);

    /// Moves `amount` from `from_side` to the other side. Requires
    /// balance(c, from_side) >= amount.
    void transfer(ChannelIndex c, int from_side, Msat amount);

    Msat total_balance() const;

    std::vector<PaymentChannel> to_channels() const;

private:
    std::vector<NodeId> ids_;
    std::unordered_map<NodeId, NodeIndex> index_;
    std::vector<Channel> channels_;
    std::vector<std::uint32_t> offsets_;
    std::vector<Incidence> incidence_;
    std::vector<std::uint8_t> merchant_flag_;
    std::vector<NodeIndex> merchants_;
    std::vector<NodeIndex> non_merchants_;
    std::size_t unknown_merchants_ = 0;
};

/// Whether `from_side` of channel `c` can forward `amount`.
inline bool can_forward(const Channel& c, int from_side, Msat amount) {
    return c.balance[from_side] >= amount && amount >= c.min_htlc;
}

/// Induced subgraph on the `size` nodes closest to `center` by hop count.
/// Nodes at equal distance are taken in ascending id order. Only nodes
/// reachable from the center are eligible.
NetworkGraph localize(const NetworkGraph& g, const NodeId& center, std::size_t size);

struct AmountEdge {
    NodeIndex to;
    ChannelIndex channel;
    Msat weight;
};

/// The liquidity-filtered, fee-weighted directed graph for one payment
/// amount, stored as CSR. Edge u->v exists iff the channel {u,v} has
/// balance(u) >= amount and amount >= min_htlc; its weight is u's fee.
///
/// Edges of channels in the `patchable` set are always stored, tagged dead
/// when they fail the filter, so refresh() can follow balance changes
/// without a rebuild.
class AmountGraph {
public:
    AmountGraph() = default;

    Msat amount() const { return amount_; }
    std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t edge_count() const { return live_edges_; }

    template <typename F>
    void for_each_out(NodeIndex u, F&& visit) const {
        for (auto e = offsets_[u]; e < offsets_[u + 1]; ++e) {
            if (alive_[e]) visit(edges_[e]);
        }
    }

    bool contains(NodeIndex from, NodeIndex to) const;

    struct DirectedEdge {
        NodeIndex from;
        NodeIndex to;
        Msat weight;
        ChannelIndex channel;
        friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
    };
    std::vector<DirectedEdge> edges() const;

    /// Re-evaluates both directions of a patchable channel against `g`.
    void refresh(const NetworkGraph& g, ChannelIndex c);

private:
    friend AmountGraph build_amount_graph(const NetworkGraph&, Msat, const ChannelSet&);

    Msat amount_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<AmountEdge> edges_;
    std::vector<std::uint8_t> alive_;
    std::size_t live_edges_ = 0;
    // Edge slot per (patchable channel, side), kept sorted by channel.
    struct Slot {
        ChannelIndex channel;
        std::array<std::uint32_t, 2> edge;
    };
    std::vector<Slot> slots_;
};

AmountGraph build_amount_graph(const NetworkGraph& g, Msat amount, const ChannelSet& patchable = {});

/// Parses, aggregates and half-splits a snapshot, then attaches merchants.
NetworkGraph load_network(const std::filesystem::path& snapshot, const std::filesystem::path& merchants = {});

}  // namespace chanfee
