#include "chanfee/simulator.hpp"

namespace chanfee {

std::vector<ChannelIndex> center_channels(const NetworkGraph& g, NodeIndex center) {
    std::vector<ChannelIndex> out;
    for (const auto& inc : g.incident(center)) out.push_back(inc.channel);
    return out;
}

SimulationReport simulate_round(NetworkGraph& g, const TrafficSpec& spec, NodeIndex center, const ChannelSet& active,
                                Rng& rng, const SimulationOptions& options) {
    const auto own = center_channels(g, center);
    std::vector<std::int32_t> slot(g.channel_count(), -1);
    for (std::size_t i = 0; i < own.size(); ++i) slot[own[i]] = static_cast<std::int32_t>(i);

    SimulationReport report;
    report.channels.resize(own.size());

    const auto transactions = generate_transactions(spec, g, rng);
    Router router(options.routing);
    const bool prefiltered = options.mode == RoutingMode::PreFiltered;

    std::size_t next = 0;
    for (const auto& entry : spec.entries()) {
        AmountGraph ag;
        if (prefiltered) ag = build_amount_graph(g, entry.amount, active);
        auto route_for = [&](const Transaction& tx) {
            return prefiltered ? router.cheapest(ag, tx.sender, tx.receiver)
                               : router.cheapest_in_search(g, tx.amount, tx.sender, tx.receiver);
        };

        for (std::uint32_t k = 0; k < entry.count; ++k) {
            const auto& tx = transactions[next++];
            TransactionOutcome outcome{tx, TxStatus::NoPath, std::nullopt, 0};
            if (auto route = route_for(tx)) {
                try {
                    outcome = settle_transaction(g, tx, *route, active);
                } catch (const StaleRoute&) {
                    // One retry against freshly filtered state.
                    if (prefiltered) ag = build_amount_graph(g, entry.amount, active);
                    if (auto retry = route_for(tx)) {
                        try {
                            outcome = settle_transaction(g, tx, *retry, active);
                        } catch (const StaleRoute&) {
                        }
                    }
                }
            }

            if (outcome.status == TxStatus::Settled) {
                ++report.settled;
                const auto& r = *outcome.route;
                if (prefiltered) {
                    for (auto c : r.channels) {
                        if (active.contains(c)) ag.refresh(g, c);
                    }
                }
                for (std::size_t i = 1; i + 1 < r.nodes.size(); ++i) {
                    if (r.nodes[i] != center) continue;
                    for (auto c : {r.channels[i - 1], r.channels[i]}) {
                        auto& stats = report.channels[static_cast<std::size_t>(slot[c])];
                        stats.routed_amount += tx.amount;
                        ++stats.routed_count;
                    }
                }
            } else {
                ++report.failed;
            }
            if (options.log) options.log->push_back(std::move(outcome));
        }
    }

    for (std::size_t i = 0; i < own.size(); ++i) {
        const auto& c = g.channel(own[i]);
        report.channels[i].balance_end = c.balance[c.ends[0] == center ? 0 : 1];
    }
    return report;
}

}  // namespace chanfee
