#include "chanfee/router.hpp"

namespace chanfee {

bool Router::path_less(NodeIndex a, NodeIndex b) {
    // Both labels are final and have equal hop counts.
    path_a_.clear();
    path_b_.clear();
    for (auto v = a; v != kNoNode; v = parent_[v]) path_a_.push_back(v);
    for (auto v = b; v != kNoNode; v = parent_[v]) path_b_.push_back(v);
    return std::lexicographical_compare(path_a_.rbegin(), path_a_.rend(), path_b_.rbegin(), path_b_.rend());
}

std::optional<Route> Router::cheapest(const AmountGraph& ag, NodeIndex sender, NodeIndex receiver) {
    return search(ag.node_count(), sender, receiver, [&](NodeIndex u, auto&& relax) {
        ag.for_each_out(u, [&](const AmountEdge& e) { relax(e.to, e.channel, e.weight); });
    });
}

std::optional<Route> Router::cheapest_in_search(const NetworkGraph& g, Msat amount, NodeIndex sender,
                                                NodeIndex receiver) {
    return search(g.node_count(), sender, receiver, [&](NodeIndex u, auto&& relax) {
        for (const auto& inc : g.incident(u)) {
            const auto& c = g.channel(inc.channel);
            if (can_forward(c, inc.side, amount)) relax(inc.peer, inc.channel, compute_fee(c.policy[inc.side], amount));
        }
    });
}

std::optional<Route> find_cheapest_route(const AmountGraph& ag, NodeIndex sender, NodeIndex receiver,
                                         RoutingOptions options) {
    Router router(options);
    return router.cheapest(ag, sender, receiver);
}

namespace {

int side_from(const Channel& c, NodeIndex from) { return c.ends[0] == from ? 0 : 1; }

}  // namespace

TransactionOutcome settle_transaction(NetworkGraph& g, const Transaction& tx, const Route& route,
                                      const ChannelSet& active) {
    if (route.nodes.size() != route.channels.size() + 1 || route.nodes.front() != tx.sender ||
        route.nodes.back() != tx.receiver) {
        throw StaleRoute("route does not join the transaction's endpoints");
    }
    for (std::size_t i = 0; i < route.channels.size(); ++i) {
        const auto& c = g.channel(route.channels[i]);
        const auto from = route.nodes[i];
        if ((c.ends[0] != from && c.ends[1] != from) || (c.ends[0] != route.nodes[i + 1] && c.ends[1] != route.nodes[i + 1])) {
            throw StaleRoute("route hop does not match its channel");
        }
        if (!can_forward(c, side_from(c, from), tx.amount)) throw StaleRoute("hop lacks liquidity");
    }
    for (std::size_t i = 0; i < route.channels.size(); ++i) {
        const auto ci = route.channels[i];
        if (active.contains(ci)) g.transfer(ci, side_from(g.channel(ci), route.nodes[i]), tx.amount);
    }
    return {tx, TxStatus::Settled, route, route.total_fee};
}

Msat route_fee(const NetworkGraph& g, const Route& route, Msat amount, RoutingOptions options) {
    Msat fee = 0;
    for (std::size_t i = options.charge_sender_fee ? 0 : 1; i < route.channels.size(); ++i) {
        const auto& c = g.channel(route.channels[i]);
        fee += compute_fee(c.policy[side_from(c, route.nodes[i])], amount);
    }
    return fee;
}

}  // namespace chanfee
