#pragma once

#include <vector>

#include "chanfee/network.hpp"
#include "chanfee/router.hpp"
#include "chanfee/traffic.hpp"

namespace chanfee {

/// Per center channel: the center's end-of-round balance and the traffic
/// the center forwarded over it.
struct ChannelStats {
    Msat balance_end = 0;
    Msat routed_amount = 0;
    std::uint64_t routed_count = 0;

    friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

struct SimulationReport {
    std::vector<ChannelStats> channels;  // in center_channels() order
    std::size_t settled = 0;
    std::size_t failed = 0;

    friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

enum class RoutingMode {
    PreFiltered,  // amount graph per traffic entry, patched after settlements
    InSearch,     // liquidity checked during the search itself
};

struct SimulationOptions {
    RoutingMode mode = RoutingMode::PreFiltered;
    RoutingOptions routing;
    std::vector<TransactionOutcome>* log = nullptr;  // receives every outcome when set
};

/// The center's channels, ordered by peer id. Index i here is channel c_i.
std::vector<ChannelIndex> center_channels(const NetworkGraph& g, NodeIndex center);

/// One LEViN round: draws the round's transactions, then routes and settles
/// them in generation order. A channel of the center accumulates a
/// transaction only when the center forwards it (is neither sender nor
/// receiver); both center channels on such a route are credited.
SimulationReport simulate_round(NetworkGraph& g, const TrafficSpec& spec, NodeIndex center, const ChannelSet& active,
                                Rng& rng, const SimulationOptions& options = {});

}  // namespace chanfee
