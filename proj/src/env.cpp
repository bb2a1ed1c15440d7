#include "chanfee/env.hpp"

#include <cmath>
#include <stdexcept>

namespace chanfee {

void EnvConfig::validate() const {
    if (node_index.empty()) throw InvalidConfig("node_index is empty");
    if (localization_size < 1) throw InvalidConfig("localization_size must be at least 1");
    if (!(fee_rate_upper > 0) || !std::isfinite(fee_rate_upper)) throw InvalidConfig("fee_rate_upper must be positive");
    if (base_fee_upper <= 0) throw InvalidConfig("base_fee_upper must be positive");
    if (traffic.entries().empty()) throw InvalidConfig("traffic has no transaction types");
    if (episode_length < 1) throw InvalidConfig("episode_length must be at least 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must lie in [0, 1]");
}

Action Action::from_flat(std::span<const double> flat) {
    if (flat.size() % 2 != 0) throw DimensionMismatch("action length must be even, got " + std::to_string(flat.size()));
    const auto k = flat.size() / 2;
    return {{flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(k)},
            {flat.begin() + static_cast<std::ptrdiff_t>(k), flat.end()}};
}

Action Action::uniform(std::size_t k, double fee_rate, double base_fee) {
    return {std::vector<double>(k, fee_rate), std::vector<double>(k, base_fee)};
}

std::vector<double> Action::flat() const {
    std::vector<double> out(fee_rates);
    out.insert(out.end(), base_fees.begin(), base_fees.end());
    return out;
}

std::vector<double> ActionSpace::low() const { return std::vector<double>(dimension(), 0.0); }

std::vector<double> ActionSpace::high() const {
    std::vector<double> out(k, fee_rate_upper);
    out.resize(2 * k, static_cast<double>(base_fee_upper));
    return out;
}

bool ActionSpace::contains(const Action& a) const {
    if (a.fee_rates.size() != k || a.base_fees.size() != k) return false;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(a.fee_rates[i] >= 0 && a.fee_rates[i] < fee_rate_upper)) return false;
        if (!(a.base_fees[i] >= 0 && a.base_fees[i] < static_cast<double>(base_fee_upper))) return false;
    }
    return true;
}

Action apply_bounds(const Action& a, const ActionSpace& space, Clipping mode, bool& clipped) {
    if (a.fee_rates.size() != space.k || a.base_fees.size() != space.k) {
        throw DimensionMismatch("action has " + std::to_string(a.fee_rates.size() + a.base_fees.size()) +
                                " components, expected " + std::to_string(space.dimension()));
    }
    clipped = false;
    Action out = a;
    const bool bounded = mode == Clipping::ToBounds;
    const double rate_max = std::nextafter(space.fee_rate_upper, 0.0);
    for (std::size_t i = 0; i < space.k; ++i) {
        auto& rate = out.fee_rates[i];
        auto& base = out.base_fees[i];
        if (!bounded && (std::isinf(rate) || std::isinf(base))) {
            throw std::invalid_argument("unbounded fee components must be finite");
        }
        if (std::isnan(rate) || rate < 0) {
            rate = 0.0;
            clipped = true;
        } else if (bounded && rate >= space.fee_rate_upper) {
            rate = rate_max;
            clipped = true;
        }
        if (std::isnan(base) || base < 0) {
            base = 0.0;
            clipped = true;
        } else {
            base = static_cast<double>(round_half_up(base));
            if (bounded && base >= static_cast<double>(space.base_fee_upper)) {
                base = static_cast<double>(space.base_fee_upper - 1);
                clipped = true;
            }
        }
    }
    return out;
}

Msat compute_reward(const SimulationReport& report, const Action& action) {
    const auto k = report.channels.size();
    if (action.fee_rates.size() != k || action.base_fees.size() != k) {
        throw DimensionMismatch("report has " + std::to_string(k) + " channels, action has " +
                                std::to_string(action.fee_rates.size()) + "+" + std::to_string(action.base_fees.size()) +
                                " components");
    }
    Msat reward = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& c = report.channels[i];
        reward += round_half_up(action.fee_rates[i] * static_cast<double>(c.routed_amount) / 1e6);
        reward += round_half_up(action.base_fees[i] * static_cast<double>(c.routed_count));
    }
    return reward;
}

Env::Env(std::shared_ptr<const NetworkGraph> network, EnvConfig config) : config_(std::move(config)) {
    config_.validate();
    if (!network) throw InvalidConfig("no network loaded");
    if (!network->find(config_.node_index)) throw UnknownCenter(config_.node_index);
    pristine_ = std::make_shared<const NetworkGraph>(localize(*network, config_.node_index, config_.localization_size));
    state_ = *pristine_;
    center_ = state_.at(config_.node_index);
    channels_ = center_channels(state_, center_);
    if (channels_.empty()) throw NodeHasNoChannels(config_.node_index);
    active_ = ChannelSet::of(state_.channel_count(), channels_);
}

int Env::center_side(std::size_t i) const { return state_.channel(channels_[i]).ends[0] == center_ ? 0 : 1; }

Observation Env::reset(std::uint64_t seed) {
    state_ = *pristine_;
    BalanceInitMode mode = config_.balance_init;
    if (auto* uniform = std::get_if<UniformRandom>(&mode)) uniform->seed = mix_seed(seed + uniform->seed, 1);
    const auto channels = init_balances(state_.to_channels(), mode);
    for (ChannelIndex c = 0; c < channels.size(); ++c) state_.set_balance(c, 0, channels[c].balance[0]);
    rng_ = Rng(mix_seed(seed, 2));
    step_ = 0;
    started_ = true;
    return observation(nullptr);
}

Observation Env::observation(const SimulationReport* report) const {
    Observation obs(2 * k(), 0);
    for (std::size_t i = 0; i < k(); ++i) {
        obs[i] = state_.balance(channels_[i], center_side(i));
        if (report) obs[k() + i] = report->channels[i].routed_amount;
    }
    return obs;
}

StepResult Env::step(const Action& action, Clipping clipping) {
    if (!started_) throw std::logic_error("step() called before reset()");
    if (done()) throw std::logic_error("episode is over; call reset()");

    StepResult result;
    result.info.applied = apply_bounds(action, action_space(), clipping, result.info.clipped);
    for (std::size_t i = 0; i < k(); ++i) {
        state_.set_policy(channels_[i], center_side(i),
                          {result.info.applied.fee_rates[i], static_cast<Msat>(result.info.applied.base_fees[i])});
    }

    SimulationOptions options;
    options.mode = config_.routing_mode;
    options.routing = config_.routing;
    const auto report = simulate_round(state_, config_.traffic, center_, active_, rng_, options);

    ++step_;
    result.observation = observation(&report);
    result.reward = compute_reward(report, result.info.applied);
    result.done = step_ >= config_.episode_length;
    result.info.step = step_;
    result.info.settled = report.settled;
    result.info.failed = report.failed;
    for (const auto& c : report.channels) {
        result.info.routed_amounts.push_back(c.routed_amount);
        result.info.routed_counts.push_back(c.routed_count);
    }
    return result;
}

ActionSpace Env::action_space() const { return {k(), config_.fee_rate_upper, config_.base_fee_upper}; }

std::vector<Msat> Env::capacities() const {
    std::vector<Msat> out;
    for (auto c : channels_) out.push_back(state_.channel(c).capacity);
    return out;
}

std::vector<FeePolicy> Env::center_policies() const {
    std::vector<FeePolicy> out;
    for (std::size_t i = 0; i < k(); ++i) out.push_back(state_.policy(channels_[i], center_side(i)));
    return out;
}

std::vector<FeePolicy> Env::snapshot_policies() const {
    std::vector<FeePolicy> out;
    for (std::size_t i = 0; i < k(); ++i) out.push_back(pristine_->policy(channels_[i], center_side(i)));
    return out;
}

std::vector<FeePolicy> Env::peer_policies() const {
    std::vector<FeePolicy> out;
    for (std::size_t i = 0; i < k(); ++i) out.push_back(state_.policy(channels_[i], 1 - center_side(i)));
    return out;
}

void Env::override_balance(std::size_t i, Msat center_balance) {
    state_.set_balance(channels_.at(i), center_side(i), center_balance);
}

}  // namespace chanfee
