#pragma once

#include <algorithm>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "chanfee/network.hpp"
#include "chanfee/traffic.hpp"

namespace chanfee {

/// nodes[0] is the sender, nodes.back() the receiver; channels[i] joins
/// nodes[i] and nodes[i + 1]. total_fee is what the intermediaries charge.
struct Route {
    std::vector<NodeIndex> nodes;
    std::vector<ChannelIndex> channels;
    Msat total_fee = 0;

    std::size_t hop_count() const { return channels.size(); }
    friend bool operator==(const Route&, const Route&) = default;
};

struct RoutingOptions {
    /// Charge the sender its own policy on the first hop (literal edge
    /// weights). Off by default: only forwarding nodes take fees.
    bool charge_sender_fee = false;
};

enum class TxStatus { Settled, NoPath };

struct TransactionOutcome {
    Transaction transaction;
    TxStatus status = TxStatus::NoPath;
    std::optional<Route> route;
    Msat fee_paid = 0;
};

/// Dijkstra with total order (fee, hop count, node sequence); the node
/// sequence is compared lexicographically by index, i.e. by node id.
/// Keeps its scratch buffers between queries.
class Router {
public:
    explicit Router(RoutingOptions options = {}) : options_(options) {}

    /// Search over a pre-filtered amount graph.
    std::optional<Route> cheapest(const AmountGraph& ag, NodeIndex sender, NodeIndex receiver);

    /// Search over the raw network, checking liquidity and computing fees
    /// edge by edge during relaxation.
    std::optional<Route> cheapest_in_search(const NetworkGraph& g, Msat amount, NodeIndex sender, NodeIndex receiver);

    const RoutingOptions& options() const { return options_; }

private:
    template <typename ForEachOut>
    std::optional<Route> search(std::size_t n, NodeIndex sender, NodeIndex receiver, ForEachOut&& for_each_out);

    bool path_less(NodeIndex a, NodeIndex b);

    RoutingOptions options_;
    std::vector<Msat> dist_;
    std::vector<std::uint32_t> hops_;
    std::vector<NodeIndex> parent_;
    std::vector<ChannelIndex> parent_channel_;
    std::vector<std::uint32_t> stamp_;  // generation marker: label valid iff stamp_ == generation_
    std::vector<std::uint32_t> done_;
    std::uint32_t generation_ = 0;
    std::vector<NodeIndex> path_a_, path_b_;
    struct Key {
        Msat cost;
        std::uint32_t hops;
        NodeIndex node;
    };
    std::vector<Key> heap_;
};

std::optional<Route> find_cheapest_route(const AmountGraph& ag, NodeIndex sender, NodeIndex receiver,
                                         RoutingOptions options = {});

/// Moves tx.amount along the route for every channel in `active`; other
/// channels are left untouched. Throws StaleRoute if any hop no longer
/// passes the liquidity filter.
TransactionOutcome settle_transaction(NetworkGraph& g, const Transaction& tx, const Route& route,
                                      const ChannelSet& active);

/// Sum of forwarding fees recomputed from the route and current policies.
Msat route_fee(const NetworkGraph& g, const Route& route, Msat amount, RoutingOptions options = {});

template <typename ForEachOut>
std::optional<Route> Router::search(std::size_t n, NodeIndex sender, NodeIndex receiver, ForEachOut&& for_each_out) {
    if (dist_.size() < n) {
        dist_.resize(n);
        hops_.resize(n);
        parent_.resize(n);
        parent_channel_.resize(n);
        stamp_.assign(n, 0);
        done_.assign(n, 0);
    }
    if (++generation_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        std::fill(done_.begin(), done_.end(), 0);
        generation_ = 1;
    }
    const auto gen = generation_;
    heap_.clear();
    const auto greater = [](const Key& a, const Key& b) {
        if (a.cost != b.cost) return a.cost > b.cost;
        if (a.hops != b.hops) return a.hops > b.hops;
        return a.node > b.node;
    };

    dist_[sender] = 0;
    hops_[sender] = 0;
    parent_[sender] = kNoNode;
    parent_channel_[sender] = kNoChannel;
    stamp_[sender] = gen;
    heap_.push_back({0, 0, sender});

    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), greater);
        const auto [cost, hops, u] = heap_.back();
        heap_.pop_back();
        if (done_[u] == gen || cost != dist_[u] || hops != hops_[u]) continue;
        done_[u] = gen;
        if (u == receiver) break;
        const bool first_hop = (u == sender) && !options_.charge_sender_fee;
        for_each_out(u, [&](NodeIndex v, ChannelIndex channel, Msat weight) {
            if (done_[v] == gen) return;
            const Msat cand = cost + (first_hop ? 0 : weight);
            const std::uint32_t cand_hops = hops + 1;
            if (stamp_[v] != gen || std::tie(cand, cand_hops) < std::tie(dist_[v], hops_[v])) {
                stamp_[v] = gen;
                dist_[v] = cand;
                hops_[v] = cand_hops;
                parent_[v] = u;
                parent_channel_[v] = channel;
                heap_.push_back({cand, cand_hops, v});
                std::push_heap(heap_.begin(), heap_.end(), greater);
            } else if (cand == dist_[v] && cand_hops == hops_[v] && parent_[v] != u && path_less(u, parent_[v])) {
                parent_[v] = u;
                parent_channel_[v] = channel;
            }
        });
    }
    if (stamp_[receiver] != gen || done_[receiver] != gen) return std::nullopt;

    Route route;
    route.total_fee = dist_[receiver];
    for (auto v = receiver; v != kNoNode; v = parent_[v]) {
        route.nodes.push_back(v);
        if (parent_channel_[v] != kNoChannel) route.channels.push_back(parent_channel_[v]);
    }
    std::reverse(route.nodes.begin(), route.nodes.end());
    std::reverse(route.channels.begin(), route.channels.end());
    return route;
}

}  // namespace chanfee
