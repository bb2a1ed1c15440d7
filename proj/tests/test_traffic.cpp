#include <doctest.h>

#include <cmath>

#include "chanfee/traffic.hpp"
#include "support.hpp"

using namespace chanfee;
using testing::channel;

namespace {

// Ring of n nodes; the first `merchants` ids are merchants.
NetworkGraph ring(std::size_t n, std::size_t merchants) {
    std::vector<PaymentChannel> channels;
    std::set<NodeId> m;
    for (std::size_t i = 0; i < n; ++i) {
        channels.push_back(channel(testing::node_name(i), testing::node_name((i + 1) % n), 10, 5));
        if (i < merchants) m.insert(testing::node_name(i));
    }
    return NetworkGraph(channels, m);
}

}  // namespace

TEST_CASE("traffic spec validation") {
    CHECK_THROWS_AS(TrafficSpec({{0, 10, 0.5}}), InvalidConfig);
    CHECK_THROWS_AS(TrafficSpec({{1, 0, 0.5}}), InvalidConfig);
    CHECK_THROWS_AS(TrafficSpec({{1, 10, 1.5}}), InvalidConfig);
    CHECK_THROWS_AS(TrafficSpec({{1, 10, -0.1}}), InvalidConfig);
    CHECK_NOTHROW(TrafficSpec({{1, 10, 1.0}}));
}

TEST_CASE("default traffic is 10 x (10k, 50k, 100k) sat with epsilon 0.6") {
    const auto spec = TrafficSpec::defaults();
    REQUIRE(spec.entries().size() == 3);
    CHECK(spec.entries()[0] == TrafficEntry{10, 10'000'000, 0.6});
    CHECK(spec.entries()[1] == TrafficEntry{10, 50'000'000, 0.6});
    CHECK(spec.entries()[2] == TrafficEntry{10, 100'000'000, 0.6});
    CHECK(spec.total_count() == 30);

    const auto g = ring(10, 3);
    Rng rng(1);
    const auto txs = generate_transactions(spec, g, rng);
    REQUIRE(txs.size() == 30);
    for (std::size_t i = 0; i < txs.size(); ++i) {
        CHECK(txs[i].amount == spec.entries()[i / 10].amount);
        CHECK(txs[i].sender != txs[i].receiver);
    }
}

TEST_CASE("transaction generation is reproducible") {
    const auto g = ring(10, 3);
    Rng a(9), b(9);
    CHECK(generate_transactions(TrafficSpec::defaults(), g, a) == generate_transactions(TrafficSpec::defaults(), g, b));
}

TEST_CASE("two-node graph always picks the other node") {
    const auto g = ring(2, 0);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) CHECK(sample_receiver(0, g, 0.6, rng) == 1);
}

TEST_CASE("single-node graph has no receiver") {
    const NetworkGraph g(std::vector<PaymentChannel>{}, {}, std::vector<NodeId>{"solo"});
    Rng rng(4);
    CHECK_THROWS_AS(sample_receiver(0, g, 0.5, rng), NoEligibleReceiver);
}

TEST_CASE("epsilon 1 with one merchant always picks it") {
    const auto g = ring(6, 1);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) CHECK(sample_receiver(3, g, 1.0, rng) == 0);
}

TEST_CASE("empty branches fall back to the other branch") {
    Rng rng(6);
    const auto none = ring(5, 0);
    for (int i = 0; i < 50; ++i) CHECK(sample_receiver(0, none, 1.0, rng) != 0);
    const auto all = ring(4, 4);
    for (int i = 0; i < 50; ++i) CHECK(sample_receiver(2, all, 0.0, rng) != 2);
    // The sole merchant sending with epsilon 1 falls back to non-merchants.
    const auto one = ring(4, 1);
    for (int i = 0; i < 50; ++i) CHECK(sample_receiver(0, one, 1.0, rng) != 0);
}

TEST_CASE("receiver distribution matches the two-stage mixture") {
    // 10 nodes, 3 merchants, non-merchant sender: P(merchant) = epsilon and
    // each branch is uniform.
    const auto g = ring(10, 3);
    Rng rng(7);
    const int samples = 100'000;
    std::vector<int> hits(10, 0);
    for (int i = 0; i < samples; ++i) ++hits[sample_receiver(9, g, 0.6, rng)];
    const int merchant_hits = hits[0] + hits[1] + hits[2];
    CHECK(std::abs(merchant_hits / double(samples) - 0.6) < 0.01);
    CHECK(hits[9] == 0);
    for (int m = 0; m < 3; ++m) CHECK(std::abs(hits[m] / double(samples) - 0.2) < 0.01);
    for (int n = 3; n < 9; ++n) CHECK(std::abs(hits[n] / double(samples) - 0.4 / 6) < 0.01);
}
