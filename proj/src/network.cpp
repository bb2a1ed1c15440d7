#include "chanfee/network.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace chanfee {

NetworkGraph::NetworkGraph(std::span<const PaymentChannel> channels, const std::set<NodeId>& merchants,
                           std::span<const NodeId> extra_nodes) {
    for (const auto& c : channels) {
        ids_.push_back(c.endpoints[0]);
        ids_.push_back(c.endpoints[1]);
    }
    ids_.insert(ids_.end(), extra_nodes.begin(), extra_nodes.end());
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    index_.reserve(ids_.size());
    for (NodeIndex i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);

    channels_.reserve(channels.size());
    for (const auto& pc : channels) {
        if (pc.balance[0] < 0 || pc.balance[1] < 0 || pc.balance[0] + pc.balance[1] != pc.capacity) {
            throw Error("channel " + pc.endpoints[0] + "-" + pc.endpoints[1] + " violates balance conservation");
        }
        Channel c;
        const auto a = index_.at(pc.endpoints[0]);
        const auto b = index_.at(pc.endpoints[1]);
        const bool swap = b < a;
        c.ends = swap ? std::array{b, a} : std::array{a, b};
        c.capacity = pc.capacity;
        c.balance = swap ? std::array{pc.balance[1], pc.balance[0]} : pc.balance;
        c.policy = swap ? std::array{pc.policy[1], pc.policy[0]} : pc.policy;
        c.min_htlc = pc.min_htlc;
        c.channel_id = pc.channel_id;
        c.last_update = pc.last_update;
        channels_.push_back(std::move(c));
    }

    std::vector<std::uint32_t> degree(ids_.size(), 0);
    for (const auto& c : channels_) {
        ++degree[c.ends[0]];
        ++degree[c.ends[1]];
    }
    offsets_.assign(ids_.size() + 1, 0);
    std::partial_sum(degree.begin(), degree.end(), offsets_.begin() + 1);
    incidence_.resize(offsets_.back());
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (ChannelIndex ci = 0; ci < channels_.size(); ++ci) {
        const auto& c = channels_[ci];
        incidence_[fill[c.ends[0]]++] = {ci, c.ends[1], 0};
        incidence_[fill[c.ends[1]]++] = {ci, c.ends[0], 1};
    }
    for (NodeIndex n = 0; n < ids_.size(); ++n) {
        std::sort(incidence_.begin() + offsets_[n], incidence_.begin() + offsets_[n + 1],
                  [](const Incidence& x, const Incidence& y) { return x.peer < y.peer; });
    }

    merchant_flag_.assign(ids_.size(), 0);
    for (const auto& m : merchants) {
        if (const auto it = index_.find(m); it != index_.end()) {
            merchant_flag_[it->second] = 1;
        } else {
            ++unknown_merchants_;
        }
    }
    for (NodeIndex n = 0; n < ids_.size(); ++n) (merchant_flag_[n] ? merchants_ : non_merchants_).push_back(n);
}

std::optional<NodeIndex> NetworkGraph::find(const NodeId& id) const {
    if (const auto it = index_.find(id); it != index_.end()) return it->second;
    return std::nullopt;
}

NodeIndex NetworkGraph::at(const NodeId& id) const {
    if (const auto n = find(id)) return *n;
    throw UnknownCenter(id);
}

void NetworkGraph::set_balance(ChannelIndex c, int side, Msat amount) {
    auto& ch = channels_.at(c);
    if (amount < 0 || amount > ch.capacity) throw Error("balance outside [0, capacity]");
    ch.balance[side] = amount;
    ch.balance[1 - side] = ch.capacity - amount;
}

void NetworkGraph::transfer(ChannelIndex c, int from_side, Msat amount) {
    auto& ch = channels_[c];
    if (amount < 0 || ch.balance[from_side] < amount) throw StaleRoute("insufficient balance for transfer");
    ch.balance[from_side] -= amount;
    ch.balance[1 - from_side] += amount;
}

Msat NetworkGraph::total_balance() const {
    Msat total = 0;
    for (const auto& c : channels_) total += c.balance[0] + c.balance[1];
    return total;
}

std::vector<PaymentChannel> NetworkGraph::to_channels() const {
    std::vector<PaymentChannel> out;
    out.reserve(channels_.size());
    for (const auto& c : channels_) {
        PaymentChannel pc;
        pc.endpoints = {ids_[c.ends[0]], ids_[c.ends[1]]};
        pc.channel_id = c.channel_id;
        pc.capacity = c.capacity;
        pc.balance = c.balance;
        pc.policy = c.policy;
        pc.min_htlc = c.min_htlc;
        pc.last_update = c.last_update;
        out.push_back(std::move(pc));
    }
    return out;
}

NetworkGraph localize(const NetworkGraph& g, const NodeId& center, std::size_t size) {
    const auto root = g.find(center);
    if (!root) throw UnknownCenter(center);
    if (size == 0) throw InvalidConfig("localization size must be at least 1");

    // Breadth-first tiers; each tier sorted so ties resolve by ascending id.
    std::vector<std::uint8_t> seen(g.node_count(), 0);
    std::vector<NodeIndex> chosen{*root};
    std::vector<NodeIndex> tier{*root};
    seen[*root] = 1;
    while (chosen.size() < size && !tier.empty()) {
        std::vector<NodeIndex> next;
        for (auto u : tier) {
            for (const auto& inc : g.incident(u)) {
                if (!seen[inc.peer]) {
                    seen[inc.peer] = 1;
                    next.push_back(inc.peer);
                }
            }
        }
        std::sort(next.begin(), next.end());
        const auto take = std::min(next.size(), size - chosen.size());
        chosen.insert(chosen.end(), next.begin(), next.begin() + static_cast<std::ptrdiff_t>(take));
        tier = std::move(next);
    }

    std::vector<std::uint8_t> keep(g.node_count(), 0);
    for (auto n : chosen) keep[n] = 1;
    std::vector<PaymentChannel> channels;
    for (const auto& c : g.to_channels()) {
        if (keep[*g.find(c.endpoints[0])] && keep[*g.find(c.endpoints[1])]) channels.push_back(c);
    }
    std::vector<NodeId> nodes;
    std::set<NodeId> merchants;
    for (auto n : chosen) {
        nodes.push_back(g.id(n));
        if (g.is_merchant(n)) merchants.insert(g.id(n));
    }
    return NetworkGraph(channels, merchants, nodes);
}

AmountGraph build_amount_graph(const NetworkGraph& g, Msat amount, const ChannelSet& patchable) {
    AmountGraph ag;
    ag.amount_ = amount;
    const auto n = g.node_count();
    ag.offsets_.assign(n + 1, 0);
    ag.edges_.reserve(2 * g.channel_count());
    ag.alive_.reserve(2 * g.channel_count());
    std::vector<AmountGraph::Slot> slots;
    for (NodeIndex u = 0; u < n; ++u) {
        for (const auto& inc : g.incident(u)) {
            const auto& c = g.channel(inc.channel);
            const bool ok = can_forward(c, inc.side, amount);
            const bool tracked = patchable.contains(inc.channel);
            if (!ok && !tracked) continue;
            if (tracked) {
                const auto pos = static_cast<std::uint32_t>(ag.edges_.size());
                if (inc.side == 0) {
                    slots.push_back({inc.channel, {pos, 0}});
                } else {
                    slots.push_back({inc.channel, {0, pos}});
                }
            }
            ag.edges_.push_back({inc.peer, inc.channel, compute_fee(c.policy[inc.side], amount)});
            ag.alive_.push_back(ok ? 1 : 0);
            ag.live_edges_ += ok ? 1 : 0;
        }
        ag.offsets_[u + 1] = static_cast<std::uint32_t>(ag.edges_.size());
    }
    // Merge the two half-slots recorded per tracked channel.
    std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) { return a.channel < b.channel; });
    for (std::size_t i = 0; i + 1 < slots.size(); i += 2) {
        ag.slots_.push_back({slots[i].channel, {slots[i].edge[0] | slots[i + 1].edge[0],
                                                slots[i].edge[1] | slots[i + 1].edge[1]}});
    }
    return ag;
}

bool AmountGraph::contains(NodeIndex from, NodeIndex to) const {
    for (auto e = offsets_[from]; e < offsets_[from + 1]; ++e) {
        if (alive_[e] && edges_[e].to == to) return true;
    }
    return false;
}

std::vector<AmountGraph::DirectedEdge> AmountGraph::edges() const {
    std::vector<DirectedEdge> out;
    for (NodeIndex u = 0; u + 1 < offsets_.size(); ++u) {
        for_each_out(u, [&](const AmountEdge& e) { out.push_back({u, e.to, e.weight, e.channel}); });
    }
    return out;
}

void AmountGraph::refresh(const NetworkGraph& g, ChannelIndex c) {
    const auto it = std::lower_bound(slots_.begin(), slots_.end(), c,
                                     [](const Slot& s, ChannelIndex key) { return s.channel < key; });
    if (it == slots_.end() || it->channel != c) throw Error("channel is not patchable in this amount graph");
    const auto& ch = g.channel(c);
    for (int side = 0; side < 2; ++side) {
        const auto e = it->edge[side];
        const std::uint8_t ok = can_forward(ch, side, amount_) ? 1 : 0;
        live_edges_ += ok;
        live_edges_ -= alive_[e];
        alive_[e] = ok;
        edges_[e].weight = compute_fee(ch.policy[side], amount_);
    }
}

NetworkGraph load_network(const std::filesystem::path& snapshot, const std::filesystem::path& merchants) {
    const auto records = parse_snapshot(snapshot);
    const auto channels = init_balances(aggregate_channels(records), HalfHalf{});
    MerchantSet merchant_set;
    if (!merchants.empty()) merchant_set = parse_merchants(merchants, node_ids(records));
    return NetworkGraph(channels, merchant_set.ids);
}

}  // namespace chanfee
