#include "chanfee/baselines.hpp"

#include <cmath>

namespace chanfee {

std::string StaticPolicy::name() const { return std::holds_alternative<SnapshotFees>(source_) ? "static_snapshot" : "static"; }

void StaticPolicy::begin_episode(const Env& env) {
    if (const auto* fees = std::get_if<ExplicitFees>(&source_)) {
        action_ = Action::uniform(env.k(), fees->fee_rate, fees->base_fee);
        return;
    }
    action_ = {};
    for (const auto& p : env.snapshot_policies()) {
        action_.fee_rates.push_back(p.fee_rate);
        action_.base_fees.push_back(static_cast<double>(p.base_fee));
    }
}

void MatchPeerPolicy::begin_episode(const Env& env) {
    action_ = {};
    for (const auto& p : env.peer_policies()) {
        action_.fee_rates.push_back(p.fee_rate);
        action_.base_fees.push_back(static_cast<double>(p.base_fee));
    }
}

void ProportionalPolicy::begin_episode(const Env& env) {
    scale_ = alpha_max_.value_or(env.config().fee_rate_upper);
    capacities_ = env.capacities();
}

Action ProportionalPolicy::act(const Observation& obs) {
    const auto k = capacities_.size();
    if (obs.size() != 2 * k) throw DimensionMismatch("observation does not match channel count");
    Action a = Action::uniform(k, 0.0, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double share = static_cast<double>(obs[i]) / static_cast<double>(capacities_[i]);
        a.fee_rates[i] = static_cast<double>(round_half_up(scale_ * (1.0 - share)));
    }
    return a;
}

EpisodeIncome run_episode(Env& env, Policy& policy, std::uint64_t seed, std::uint32_t episode, double gamma) {
    EpisodeIncome out{seed, episode, 0.0, 0};
    auto obs = env.reset(episode_seed(seed, episode));
    policy.begin_episode(env);
    double discount = 1.0;
    for (;;) {
        auto result = env.step(policy.act(obs), policy.clipping());
        out.discounted_income += discount * static_cast<double>(result.reward);
        out.total_income += result.reward;
        discount *= gamma;
        if (result.done) break;
        obs = std::move(result.observation);
    }
    return out;
}

Evaluation evaluate_policy(const Env& env, Policy& policy, std::uint32_t episodes, double gamma,
                           std::span<const std::uint64_t> seeds) {
    Evaluation eval;
    Env local = env;
    for (auto seed : seeds) {
        for (std::uint32_t e = 0; e < episodes; ++e) eval.runs.push_back(run_episode(local, policy, seed, e, gamma));
    }
    if (eval.runs.empty()) return eval;
    double sum = 0;
    for (const auto& r : eval.runs) sum += r.discounted_income;
    eval.mean = sum / static_cast<double>(eval.runs.size());
    double sq = 0;
    for (const auto& r : eval.runs) sq += (r.discounted_income - eval.mean) * (r.discounted_income - eval.mean);
    eval.stddev = std::sqrt(sq / static_cast<double>(eval.runs.size()));
    return eval;
}

RandomSearchResult random_search_agent(const Env& env, std::uint32_t budget, std::uint64_t seed) {
    if (budget < 1) throw InvalidConfig("random search budget must be at least 1");
    const auto space = env.action_space();
    Rng rng(mix_seed(seed, 0x5EA6C4));
    Env local = env;
    RandomSearchResult best;
    for (std::uint32_t i = 0; i < budget; ++i) {
        Action a = Action::uniform(space.k, 0.0, 0.0);
        for (auto& r : a.fee_rates) r = rng.uniform(0.0, space.fee_rate_upper);
        for (auto& b : a.base_fees) b = static_cast<double>(rng.below(static_cast<std::uint64_t>(space.base_fee_upper)));
        FixedPolicy policy(a);
        const auto income = run_episode(local, policy, seed, 0, env.config().gamma).discounted_income;
        if (i == 0 || income > best.income) best = {std::move(a), income};
    }
    return best;
}

std::unique_ptr<Policy> make_policy(const std::string& name, std::optional<double> fee_rate,
                                    std::optional<double> base_fee, std::optional<double> alpha_max) {
    if (name == "static") {
        if (fee_rate.has_value() != base_fee.has_value()) {
            throw InvalidConfig("static policy needs both --alpha and --beta (or neither, for snapshot fees)");
        }
        if (fee_rate) return std::make_unique<StaticPolicy>(ExplicitFees{*fee_rate, *base_fee});
        return std::make_unique<StaticPolicy>(SnapshotFees{});
    }
    if (name == "match_peer") return std::make_unique<MatchPeerPolicy>();
    if (name == "proportional") return std::make_unique<ProportionalPolicy>(alpha_max);
    throw InvalidConfig("unknown policy '" + name + "'");
}

}  // namespace chanfee
