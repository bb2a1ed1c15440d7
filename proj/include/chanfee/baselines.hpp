#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chanfee/env.hpp"

namespace chanfee {

/// A fee-setting rule: maps the current observation to an action.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    /// Called after every reset, before the first act().
    virtual void begin_episode(const Env& env) { (void)env; }
    virtual Action act(const Observation& obs) = 0;
    /// How the environment should treat this policy's actions.
    virtual Clipping clipping() const { return Clipping::ToBounds; }
};

struct SnapshotFees {};
struct ExplicitFees {
    double fee_rate = 0;
    double base_fee = 0;
};
using StaticSource = std::variant<SnapshotFees, ExplicitFees>;

/// Same fees on every channel for the whole episode. Applied as given, not
/// clipped to the action box, so fee levels outside the learning bounds can
/// be studied.
class StaticPolicy final : public Policy {
public:
    explicit StaticPolicy(StaticSource source) : source_(source) {}
    std::string name() const override;
    void begin_episode(const Env& env) override;
    Action act(const Observation&) override { return action_; }
    Clipping clipping() const override { return Clipping::None; }

private:
    StaticSource source_;
    Action action_;
};

/// Each channel copies the peer's policy on that channel.
class MatchPeerPolicy final : public Policy {
public:
    std::string name() const override { return "match_peer"; }
    void begin_episode(const Env& env) override;
    Action act(const Observation&) override { return action_; }

private:
    Action action_;
};

/// base fee 0, fee rate round(alpha_max * (1 - balance / capacity)).
class ProportionalPolicy final : public Policy {
public:
    /// Defaults to the environment's fee_rate_upper.
    explicit ProportionalPolicy(std::optional<double> alpha_max = std::nullopt) : alpha_max_(alpha_max) {}
    std::string name() const override { return "proportional"; }
    void begin_episode(const Env& env) override;
    Action act(const Observation& obs) override;

private:
    std::optional<double> alpha_max_;
    double scale_ = 0;
    std::vector<Msat> capacities_;
};

/// Plays a fixed action inside the box (used by random search).
class FixedPolicy final : public Policy {
public:
    explicit FixedPolicy(Action a, std::string name = "fixed") : action_(std::move(a)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    Action act(const Observation&) override { return action_; }

private:
    Action action_;
    std::string name_;
};

struct EpisodeIncome {
    std::uint64_t seed = 0;
    std::uint32_t episode = 0;
    double discounted_income = 0;
    Msat total_income = 0;
};

struct Evaluation {
    double mean = 0;
    double stddev = 0;  // population standard deviation over all runs
    std::vector<EpisodeIncome> runs;
};

/// sum_t gamma^t r_t for one episode from reset(episode_seed(seed, episode)).
EpisodeIncome run_episode(Env& env, Policy& policy, std::uint64_t seed, std::uint32_t episode, double gamma);

/// `episodes` episodes per seed; runs are ordered by (seed, episode).
Evaluation evaluate_policy(const Env& env, Policy& policy, std::uint32_t episodes, double gamma,
                           std::span<const std::uint64_t> seeds);

struct RandomSearchResult {
    Action best;
    double income = 0;
};

/// Samples `budget` static actions uniformly from the action box and keeps
/// the one with the highest discounted income over one episode seeded with
/// `seed`. Ties keep the earlier sample.
RandomSearchResult random_search_agent(const Env& env, std::uint32_t budget, std::uint64_t seed);

/// Builds a policy by CLI name: static, match_peer, proportional.
std::unique_ptr<Policy> make_policy(const std::string& name, std::optional<double> fee_rate,
                                    std::optional<double> base_fee, std::optional<double> alpha_max);

}  // namespace chanfee
