#pragma once

#include <memory>
#include <span>
#include <vector>

#include "chanfee/network.hpp"
#include "chanfee/simulator.hpp"
#include "chanfee/snapshot.hpp"
#include "chanfee/traffic.hpp"

namespace chanfee {

struct EnvConfig {
    NodeId node_index = "76620";
    std::size_t localization_size = 100;
    double fee_rate_upper = 1000.0;  // ppm, exclusive
    Msat base_fee_upper = 10'000;    // msat, exclusive
    TrafficSpec traffic = TrafficSpec::defaults();
    std::uint32_t episode_length = 200;
    double gamma = 0.99;
    BalanceInitMode balance_init = HalfHalf{};
    std::uint64_t seed = 0;
    RoutingMode routing_mode = RoutingMode::PreFiltered;
    RoutingOptions routing;

    /// Throws InvalidConfig.
    void validate() const;
};

/// (b_1..b_k, m_1..m_k): the center's balance on each channel, then the
/// amount it forwarded over each channel in the last round.
using Observation = std::vector<Msat>;

/// Fee rates (ppm) then base fees (msat), one per center channel.
struct Action {
    std::vector<double> fee_rates;
    std::vector<double> base_fees;

    std::size_t k() const { return fee_rates.size(); }

    /// Splits a flat 2k vector; throws DimensionMismatch on odd length.
    static Action from_flat(std::span<const double> flat);
    static Action uniform(std::size_t k, double fee_rate, double base_fee);
    std::vector<double> flat() const;

    friend bool operator==(const Action&, const Action&) = default;
};

/// Box [0, fee_rate_upper)^k x [0, base_fee_upper)^k.
struct ActionSpace {
    std::size_t k = 0;
    double fee_rate_upper = 0;
    Msat base_fee_upper = 0;

    std::size_t dimension() const { return 2 * k; }
    std::vector<double> low() const;
    std::vector<double> high() const;
    bool contains(const Action& a) const;
};

enum class Clipping {
    ToBounds,  // project onto the action box
    None,      // only negative or non-finite components are zeroed
};

/// Base fees are rounded half-up to whole msat. With ToBounds, fee rates at
/// or above the bound become the largest double below it and base fees
/// become base_fee_upper - 1. `clipped` reports whether any component was
/// moved by a bound.
Action apply_bounds(const Action& a, const ActionSpace& space, Clipping mode, bool& clipped);

/// sum_i round(fee_rate_i * m_i / 1e6) + base_fee_i * n_i.
Msat compute_reward(const SimulationReport& report, const Action& action);

struct StepInfo {
    std::uint32_t step = 0;  // 1-based index of the step just taken
    std::size_t settled = 0;
    std::size_t failed = 0;
    std::vector<Msat> routed_amounts;
    std::vector<std::uint64_t> routed_counts;
    Action applied;
    bool clipped = false;

    friend bool operator==(const StepInfo&, const StepInfo&) = default;
};

struct StepResult {
    Observation observation;
    Msat reward = 0;
    bool done = false;
    StepInfo info;

    friend bool operator==(const StepResult&, const StepResult&) = default;
};

/// The fee-setting MDP around one center node. The network is localized
/// once at construction; reset() restores that snapshot state and draws
/// fresh balances and traffic streams from the seed.
///
/// Copies are independent episodes sharing the immutable localized
/// snapshot, so instances may run on different threads.
class Env {
public:
    /// Throws UnknownCenter, NodeHasNoChannels or InvalidConfig.
    Env(std::shared_ptr<const NetworkGraph> network, EnvConfig config);

    Observation reset(std::uint64_t seed);
    StepResult step(const Action& action, Clipping clipping = Clipping::ToBounds);

    ActionSpace action_space() const;
    std::size_t k() const { return channels_.size(); }
    const EnvConfig& config() const { return config_; }
    const NetworkGraph& graph() const { return state_; }
    NodeIndex center() const { return center_; }
    std::span<const ChannelIndex> channels() const { return channels_; }
    std::uint32_t step_index() const { return step_; }
    bool started() const { return started_; }
    bool done() const { return started_ && step_ >= config_.episode_length; }

    std::vector<Msat> capacities() const;
    /// Current policies of the center (its side of each channel).
    std::vector<FeePolicy> center_policies() const;
    /// Policies of the center as loaded from the snapshot.
    std::vector<FeePolicy> snapshot_policies() const;
    /// The peer's side of each channel.
    std::vector<FeePolicy> peer_policies() const;

    /// Manual rebalancing hook: set the center's balance on channel c_i.
    void override_balance(std::size_t i, Msat center_balance);

    Observation observation(const SimulationReport* report) const;

private:
    int center_side(std::size_t i) const;

    EnvConfig config_;
    std::shared_ptr<const NetworkGraph> pristine_;
    NetworkGraph state_;
    NodeIndex center_ = kNoNode;
    std::vector<ChannelIndex> channels_;
    ChannelSet active_;
    Rng rng_{0};
    std::uint32_t step_ = 0;
    bool started_ = false;
};

/// Seed used for episode `episode` of a run seeded with `seed`.
inline std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
    return episode == 0 ? seed : mix_seed(seed, episode);
}

}  // namespace chanfee
