#include <doctest.h>

#include <cmath>
#include <limits>

#include "chanfee/env.hpp"
#include "support.hpp"

using namespace chanfee;
using testing::channel;

namespace {

std::shared_ptr<const NetworkGraph> fixture() {
    static const auto g = std::make_shared<const NetworkGraph>(load_network(testing::kSnapshot, testing::kMerchants));
    return g;
}

EnvConfig node_a(std::uint32_t episode_length = 200) {
    EnvConfig c;
    c.node_index = "97851";
    c.episode_length = episode_length;
    return c;
}

Msat recompute(const StepResult& r) {
    Msat total = 0;
    for (std::size_t i = 0; i < r.info.applied.k(); ++i) {
        total += round_half_up(r.info.applied.fee_rates[i] * static_cast<double>(r.info.routed_amounts[i]) / 1e6) +
                 static_cast<Msat>(r.info.applied.base_fees[i]) * static_cast<Msat>(r.info.routed_counts[i]);
    }
    return total;
}

}  // namespace

TEST_CASE("reward formula") {
    SimulationReport report;
    report.channels = {{0, 1'000'000, 2}};
    CHECK(compute_reward(report, Action::uniform(1, 100, 10)) == 120);
    CHECK(compute_reward(report, Action::uniform(1, 0, 0)) == 0);
    report.channels = {{0, 0, 0}, {0, 0, 0}};
    CHECK(compute_reward(report, Action::uniform(2, 999, 9999)) == 0);
    CHECK_THROWS_AS(compute_reward(report, Action::uniform(3, 1, 1)), DimensionMismatch);
}

TEST_CASE("action flattening") {
    const auto a = Action::from_flat(std::vector<double>{1, 2, 3, 4});
    CHECK(a.fee_rates == std::vector<double>{1, 2});
    CHECK(a.base_fees == std::vector<double>{3, 4});
    CHECK(a.flat() == std::vector<double>{1, 2, 3, 4});
    CHECK_THROWS_AS(Action::from_flat(std::vector<double>{1, 2, 3}), DimensionMismatch);
}

TEST_CASE("bounds projection") {
    const ActionSpace space{2, 1000, 10000};
    bool clipped = false;

    auto inside = apply_bounds(Action{{999.5, 0}, {9999, 0.4}}, space, Clipping::ToBounds, clipped);
    CHECK_FALSE(clipped);
    CHECK(inside.fee_rates == std::vector<double>{999.5, 0});
    CHECK(inside.base_fees == std::vector<double>{9999, 0});
    CHECK(space.contains(inside));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto out = apply_bounds(Action{{1000, nan}, {-3, 9999.6}}, space, Clipping::ToBounds, clipped);
    CHECK(clipped);
    CHECK(out.fee_rates[0] < 1000);
    CHECK(out.fee_rates[0] == std::nextafter(1000.0, 0.0));
    CHECK(out.fee_rates[1] == 0);
    CHECK(out.base_fees == std::vector<double>{0, 9999});
    CHECK(space.contains(out));

    auto big = apply_bounds(Action{{std::numeric_limits<double>::infinity(), 5}, {1e12, 5}}, space, Clipping::ToBounds, clipped);
    CHECK(clipped);
    CHECK(space.contains(big));

    auto raw = apply_bounds(Action{{64065.05, 1}, {277928.18, 2.5}}, space, Clipping::None, clipped);
    CHECK_FALSE(clipped);
    CHECK(raw.fee_rates[0] == 64065.05);
    CHECK(raw.base_fees == std::vector<double>{277928, 3});
    CHECK_THROWS(apply_bounds(Action{{std::numeric_limits<double>::infinity(), 1}, {1, 1}}, space, Clipping::None, clipped));

    CHECK_THROWS_AS(apply_bounds(Action::uniform(3, 1, 1), space, Clipping::ToBounds, clipped), DimensionMismatch);
}

TEST_CASE("fixture node a exposes a 12-dimensional problem") {
    Env env(fixture(), node_a());
    CHECK(env.k() == 6);
    const auto space = env.action_space();
    CHECK(space.dimension() == 12);
    const auto high = space.high();
    for (int i = 0; i < 6; ++i) CHECK(high[i] == 1000);
    for (int i = 6; i < 12; ++i) CHECK(high[i] == 10000);
    CHECK(space.low() == std::vector<double>(12, 0.0));

    const auto obs = env.reset(0);
    REQUIRE(obs.size() == 12);
    const auto caps = env.capacities();
    for (int i = 0; i < 6; ++i) {
        CHECK(obs[i] == caps[i] / 2);
        CHECK(obs[6 + i] == 0);
    }
    CHECK(env.reset(0) == obs);
}

TEST_CASE("single-channel centre gives a 2-dimensional box") {
    const auto g = std::make_shared<const NetworkGraph>(
        NetworkGraph(std::vector<PaymentChannel>{channel("x", "y", 1000, 500), channel("y", "z", 1000, 500)}, {}));
    EnvConfig c;
    c.node_index = "x";
    Env env(g, c);
    CHECK(env.action_space().dimension() == 2);
}

TEST_CASE("construction errors") {
    EnvConfig c;
    c.node_index = "not-a-node";
    CHECK_THROWS_AS(Env(fixture(), c), UnknownCenter);

    const auto g = std::make_shared<const NetworkGraph>(
        NetworkGraph(std::vector<PaymentChannel>{channel("x", "y", 1000, 500)}, {}, std::vector<NodeId>{"lonely"}));
    c.node_index = "lonely";
    CHECK_THROWS_AS(Env(g, c), NodeHasNoChannels);

    auto bad = node_a();
    bad.gamma = 1.5;
    CHECK_THROWS_AS(Env(fixture(), bad), InvalidConfig);
    bad = node_a();
    bad.fee_rate_upper = 0;
    CHECK_THROWS_AS(Env(fixture(), bad), InvalidConfig);
    bad = node_a();
    bad.episode_length = 0;
    CHECK_THROWS_AS(Env(fixture(), bad), InvalidConfig);
}

TEST_CASE("episode protocol") {
    Env env(fixture(), node_a(3));
    CHECK_THROWS_AS(env.step(Action::uniform(6, 1, 1)), std::logic_error);
    env.reset(1);
    CHECK_THROWS_AS(env.step(Action::uniform(5, 1, 1)), DimensionMismatch);
    CHECK_FALSE(env.step(Action::uniform(6, 1, 1)).done);
    CHECK_FALSE(env.step(Action::uniform(6, 1, 1)).done);
    const auto last = env.step(Action::uniform(6, 1, 1));
    CHECK(last.done);
    CHECK(last.info.step == 3);
    CHECK_THROWS_AS(env.step(Action::uniform(6, 1, 1)), std::logic_error);
    env.reset(1);
    CHECK(env.step_index() == 0);
    CHECK_NOTHROW(env.step(Action::uniform(6, 1, 1)));
}

TEST_CASE("zero fees earn nothing") {
    Env env(fixture(), node_a(20));
    env.reset(4);
    for (int t = 0; t < 20; ++t) CHECK(env.step(Action::uniform(6, 0, 0)).reward == 0);
}

TEST_CASE("rewards at the bound recompute from the step log") {
    Env env(fixture(), node_a(50));
    env.reset(5);
    Msat total = 0;
    for (int t = 0; t < 50; ++t) {
        const auto r = env.step(Action::uniform(6, 999, 9999));
        CHECK(r.reward == recompute(r));
        CHECK_FALSE(r.info.clipped);
        for (int i = 0; i < 6; ++i) CHECK(r.observation[6 + i] == r.info.routed_amounts[i]);
        total += r.reward;
    }
    CHECK(total >= 0);
}

TEST_CASE("low static fees earn positive income on node a") {
    Env env(fixture(), node_a());
    env.reset(0);
    Msat total = 0;
    while (!env.done()) total += env.step(Action::uniform(6, 1, 1000)).reward;
    CHECK(total > 0);
}

TEST_CASE("episodes are reproducible") {
    auto trace = [](std::uint64_t seed) {
        Env env(fixture(), node_a(40));
        std::vector<Observation> obs{env.reset(seed)};
        std::vector<Msat> rewards;
        Rng script(99);
        while (!env.done()) {
            std::vector<double> flat(12);
            for (int i = 0; i < 6; ++i) flat[i] = script.uniform(0, 1000);
            for (int i = 6; i < 12; ++i) flat[i] = script.uniform(0, 10000);
            const auto r = env.step(Action::from_flat(flat));
            obs.push_back(r.observation);
            rewards.push_back(r.reward);
        }
        return std::pair{obs, rewards};
    };
    CHECK(trace(8) == trace(8));
    CHECK(trace(8) != trace(9));
}

TEST_CASE("uniform balance init draws per-episode balances") {
    auto c = node_a(1);
    c.balance_init = UniformRandom{0};
    Env env(fixture(), c);
    const auto a = env.reset(1);
    CHECK(env.reset(1) == a);
    CHECK(env.reset(2) != a);
    for (std::size_t i = 0; i < env.k(); ++i) CHECK(a[i] <= env.capacities()[i]);
}

TEST_CASE("copies of an environment are independent") {
    Env env(fixture(), node_a(5));
    env.reset(3);
    Env copy = env;
    const auto r1 = env.step(Action::uniform(6, 1, 1000));
    const auto r2 = copy.step(Action::uniform(6, 1, 1000));
    CHECK(r1 == r2);
    CHECK(env.step_index() == 1);
}

TEST_CASE("balance override feeds the next observation") {
    Env env(fixture(), node_a(5));
    env.reset(0);
    env.override_balance(0, 0);
    CHECK(env.observation(nullptr)[0] == 0);
    CHECK_THROWS(env.override_balance(0, env.capacities()[0] + 1));
}

TEST_CASE("snapshot policies survive fee changes") {
    Env env(fixture(), node_a(5));
    env.reset(0);
    const auto snapshot = env.snapshot_policies();
    for (const auto& p : snapshot) CHECK(p == FeePolicy{2000, 5000});
    env.step(Action::uniform(6, 7, 8));
    for (const auto& p : env.center_policies()) CHECK(p == FeePolicy{7, 8});
    CHECK(env.snapshot_policies() == snapshot);
    env.reset(0);
    CHECK(env.center_policies() == snapshot);
}
