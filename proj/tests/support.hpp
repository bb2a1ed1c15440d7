#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chanfee/network.hpp"
#include "chanfee/rng.hpp"
#include "chanfee/router.hpp"
#include "chanfee/snapshot.hpp"

namespace testing {

using namespace chanfee;

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(CHANFEE_DATA_DIR) / name; }

inline const std::string kSnapshot = data_path("ln_snapshot_synthetic.csv").string();
inline const std::string kMerchants = data_path("merchants_synthetic.txt").string();

inline PaymentChannel channel(const NodeId& a, const NodeId& b, Msat capacity, Msat balance_a, FeePolicy policy_a = {},
                              FeePolicy policy_b = {}, Msat min_htlc = 0) {
    PaymentChannel c;
    const bool swap = b < a;
    c.endpoints = swap ? std::array{b, a} : std::array{a, b};
    c.capacity = capacity;
    c.balance = swap ? std::array{capacity - balance_a, balance_a} : std::array{balance_a, capacity - balance_a};
    c.policy = swap ? std::array{policy_b, policy_a} : std::array{policy_a, policy_b};
    c.min_htlc = min_htlc;
    c.channel_id = a + "x" + b;
    return c;
}

inline NodeId node_name(std::size_t i) { return "n" + std::to_string(100 + i); }

/// Random graph on `nodes` nodes with up to `channels` channels; parallel
/// channels are allowed unless `simple`.
inline std::vector<PaymentChannel> random_channels(Rng& rng, std::size_t nodes, std::size_t channels, Msat max_capacity,
                                                   bool simple = false) {
    std::vector<PaymentChannel> out;
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t attempt = 0; out.size() < channels && attempt < 10 * channels; ++attempt) {
        const auto a = rng.below(nodes);
        const auto b = rng.below(nodes);
        if (a == b) continue;
        if (simple && !pairs.insert({std::min(a, b), std::max(a, b)}).second) continue;
        const Msat cap = 1 + static_cast<Msat>(rng.below(static_cast<std::uint64_t>(max_capacity)));
        const Msat bal = static_cast<Msat>(rng.below(static_cast<std::uint64_t>(cap) + 1));
        auto policy = [&] {
            // Small integer fees produce many exact ties.
            return FeePolicy{static_cast<double>(rng.below(4) * 1000), static_cast<Msat>(rng.below(4))};
        };
        auto c = channel(node_name(a), node_name(b), cap, bal, policy(), policy(),
                         rng.below(5) == 0 ? static_cast<Msat>(rng.below(static_cast<std::uint64_t>(max_capacity))) : 0);
        c.channel_id = "c" + std::to_string(out.size());
        out.push_back(std::move(c));
    }
    return out;
}

/// Random graph that always contains all `nodes` nodes, isolated or not.
inline NetworkGraph random_graph(Rng& rng, std::size_t nodes, std::size_t channels, Msat max_capacity,
                                 const std::set<NodeId>& merchants = {}) {
    const auto list = random_channels(rng, nodes, channels, max_capacity);
    std::vector<NodeId> names;
    for (std::size_t i = 0; i < nodes; ++i) names.push_back(node_name(i));
    return NetworkGraph(list, merchants, names);
}

struct OracleRoute {
    Msat cost = 0;
    std::vector<NodeIndex> nodes;
};

/// Exhaustive search over all simple well-funded paths, minimised by
/// (cost, hops, node sequence).
inline std::optional<OracleRoute> brute_force_route(const NetworkGraph& g, Msat amount, NodeIndex sender,
                                                    NodeIndex receiver, bool charge_sender_fee = false) {
    std::optional<OracleRoute> best;
    std::vector<NodeIndex> path{sender};
    std::vector<char> on_path(g.node_count(), 0);
    on_path[sender] = 1;
    auto better = [](const OracleRoute& a, const OracleRoute& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
        return a.nodes < b.nodes;
    };
    auto dfs = [&](auto&& self, NodeIndex u, Msat cost) -> void {
        if (u == receiver) {
            OracleRoute r{cost, path};
            if (!best || better(r, *best)) best = r;
            return;
        }
        for (ChannelIndex ci = 0; ci < g.channel_count(); ++ci) {
            const auto& c = g.channel(ci);
            int side = -1;
            if (c.ends[0] == u) side = 0;
            if (c.ends[1] == u) side = 1;
            if (side < 0) continue;
            const auto v = c.ends[1 - side];
            if (on_path[v]) continue;
            if (!(c.balance[side] >= amount && amount >= c.min_htlc)) continue;
            const bool exempt = u == sender && !charge_sender_fee;
            const Msat w = exempt ? 0 : round_half_up(c.policy[side].fee_rate * static_cast<double>(amount) / 1e6) +
                                            c.policy[side].base_fee;
            on_path[v] = 1;
            path.push_back(v);
            self(self, v, cost + w);
            path.pop_back();
            on_path[v] = 0;
        }
    };
    dfs(dfs, sender, 0);
    return best;
}

}  // namespace testing
