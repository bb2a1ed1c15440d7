#include "chanfee/traffic.hpp"

#include <algorithm>
#include <cmath>

namespace chanfee {

namespace {

// Uniform pick from a sorted index list, skipping `excluded` if present.
// Returns kNoNode when nothing is left.
NodeIndex pick_excluding(std::span<const NodeIndex> pool, NodeIndex excluded, Rng& rng) {
    const bool has_excluded = std::binary_search(pool.begin(), pool.end(), excluded);
    const std::size_t size = pool.size() - (has_excluded ? 1 : 0);
    if (size == 0) return kNoNode;
    auto i = static_cast<std::size_t>(rng.below(size));
    if (has_excluded && pool[i] >= excluded) ++i;
    return pool[i];
}

}  // namespace

TrafficSpec::TrafficSpec(std::vector<TrafficEntry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.count < 1) throw InvalidConfig("transaction count must be at least 1");
        if (e.amount <= 0) throw InvalidConfig("transaction amount must be positive");
        if (!(e.epsilon >= 0.0 && e.epsilon <= 1.0)) throw InvalidConfig("epsilon must lie in [0, 1]");
    }
}

TrafficSpec TrafficSpec::defaults() {
    return TrafficSpec({{10, 10'000 * kMsatPerSat, 0.6}, {10, 50'000 * kMsatPerSat, 0.6}, {10, 100'000 * kMsatPerSat, 0.6}});
}

std::size_t TrafficSpec::total_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.count;
    return n;
}

NodeIndex sample_receiver(NodeIndex sender, const NetworkGraph& g, double epsilon, Rng& rng) {
    if (g.node_count() < 2) throw NoEligibleReceiver();
    const bool merchant_branch = rng.uniform01() < epsilon;
    const auto primary = merchant_branch ? g.merchants() : g.non_merchants();
    const auto fallback = merchant_branch ? g.non_merchants() : g.merchants();
    auto r = pick_excluding(primary, sender, rng);
    if (r == kNoNode) r = pick_excluding(fallback, sender, rng);
    if (r == kNoNode) throw NoEligibleReceiver();
    return r;
}

std::vector<Transaction> generate_transactions(const TrafficSpec& spec, const NetworkGraph& g, Rng& rng) {
    if (g.node_count() < 2) throw NoEligibleReceiver();
    std::vector<Transaction> out;
    out.reserve(spec.total_count());
    for (const auto& entry : spec.entries()) {
        for (std::uint32_t i = 0; i < entry.count; ++i) {
            const auto sender = static_cast<NodeIndex>(rng.below(g.node_count()));
            out.push_back({entry.amount, sender, sample_receiver(sender, g, entry.epsilon, rng)});
        }
    }
    return out;
}

}  // namespace chanfee
