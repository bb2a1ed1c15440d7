// Generates the deterministic synthetic snapshot and merchant list under data/.
//
// Usage: make_fixture <snapshot.csv> <merchants.txt> [seed]

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "chanfee/rng.hpp"
#include "chanfee/snapshot.hpp"

namespace {

using chanfee::ChannelRecord;
using chanfee::Rng;

constexpr int kNodes = 3000;
constexpr int kHubs = 40;
constexpr std::int64_t kEpoch = 1618185600;  // 2021-04-12

double normal(Rng& rng) {
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

std::int64_t lognormal_sat(Rng& rng, double median, double sigma) {
    const auto v = static_cast<std::int64_t>(median * std::exp(sigma * normal(rng)));
    return std::clamp<std::int64_t>(v, 20'000, 167'772'150);
}

struct Policy {
    std::int64_t base;
    double rate;
};

// Edge-node fees: mostly the client defaults (base 1000, rate 1).
Policy leaf_policy(Rng& rng) {
    const double u = rng.uniform01();
    if (u < 0.45) return {1000, 1};
    if (u < 0.60) return {0, 1};
    if (u < 0.85) return {1000, std::round(std::exp(rng.uniform(std::log(10.0), std::log(500.0))))};
    return {static_cast<std::int64_t>(rng.below(5001)), std::round(rng.uniform(1, 5000))};
}

Policy hub_policy(Rng& rng) {
    return {1000, std::round(std::exp(rng.uniform(std::log(10.0), std::log(2000.0))))};
}

class Builder {
public:
    explicit Builder(Rng& rng) : rng_(rng) {}

    void add(const std::string& a, const std::string& b, std::int64_t capacity, Policy pa, Policy pb,
             bool both_directions = true) {
        const std::string id = std::to_string(700000000000000000ull + serial_++ * 1099511627ull);
        const auto ts_a = kEpoch - static_cast<std::int64_t>(rng_.below(86400 * 14));
        records_.push_back({a, b, id, capacity, pa.base, pa.rate, 1000, ts_a});
        if (both_directions) {
            const auto ts_b = kEpoch - static_cast<std::int64_t>(rng_.below(86400 * 14));
            records_.push_back({b, a, id, capacity, pb.base, pb.rate, 1000, ts_b});
        }
    }

    std::vector<ChannelRecord>& records() { return records_; }

private:
    Rng& rng_;
    std::uint64_t serial_ = 0;
    std::vector<ChannelRecord> records_;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: make_fixture <snapshot.csv> <merchants.txt> [seed]\n";
        return 2;
    }
    const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 20210412;
    Rng rng(seed);

    // Reserved ids: the three reference centers and the default center.
    const std::vector<std::string> centers{"97851", "71555", "109618"};
    std::set<std::string> used(centers.begin(), centers.end());
    used.insert("76620");
    std::vector<std::string> ids{"76620"};
    while (ids.size() < kNodes - centers.size()) {
        const auto id = std::to_string(1 + rng.below(124999));
        if (used.insert(id).second) ids.push_back(id);
    }
    std::vector<std::string> hubs(ids.begin(), ids.begin() + kHubs);
    std::vector<std::string> others(ids.begin() + kHubs, ids.end());

    Builder b(rng);
    for (int i = 0; i < kHubs; ++i) {
        for (int j = i + 1; j < kHubs; ++j) {
            b.add(hubs[i], hubs[j], lognormal_sat(rng, 10'000'000, 0.5), hub_policy(rng), hub_policy(rng));
        }
    }

    // Other nodes attach to 1-4 hubs, with occasional links between themselves.
    std::vector<double> weight(kHubs);
    for (int i = 0; i < kHubs; ++i) weight[i] = 1.0 / (1.0 + i * 0.15);
    double weight_sum = 0;
    for (auto w : weight) weight_sum += w;
    auto pick_hub = [&] {
        double x = rng.uniform01() * weight_sum;
        for (int i = 0; i < kHubs; ++i) {
            x -= weight[i];
            if (x < 0) return i;
        }
        return kHubs - 1;
    };
    for (std::size_t n = 0; n < others.size(); ++n) {
        const int links = 1 + static_cast<int>(rng.below(4));
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < links) chosen.insert(pick_hub());
        for (int h : chosen) {
            const auto cap = lognormal_sat(rng, 2'000'000, 1.0);
            b.add(others[n], hubs[h], cap, leaf_policy(rng), hub_policy(rng), rng.uniform01() < 0.97);
            if (rng.uniform01() < 0.05) {
                b.add(others[n], hubs[h], lognormal_sat(rng, 1'000'000, 0.8), leaf_policy(rng), hub_policy(rng));
            }
        }
        if (n > 0 && rng.uniform01() < 0.3) {
            const auto& peer = others[rng.below(n)];
            b.add(others[n], peer, lognormal_sat(rng, 1'000'000, 1.0), leaf_policy(rng), leaf_policy(rng));
        }
    }

    // Reference centers: hub peers only, capacities summing to fixed totals.
    // Peers quote low fees towards the center; the center's own snapshot
    // fees are high.
    struct CenterSpec {
        std::string id;
        std::vector<std::int64_t> capacities;  // sat; a repeated hub index makes a parallel channel
        std::vector<int> hub_index;
        Policy own;
    };
    const std::vector<CenterSpec> specs{
        {"97851", {9'000'000, 6'000'000, 5'000'000, 4'000'000, 2'654'272, 1'500'000}, {0, 2, 4, 6, 9, 13},
         {5000, 2000}},
        {"71555", {8'000'000, 5'000'000, 3'498'650, 2'500'000, 1'500'000, 1'000'000}, {1, 3, 5, 8, 11, 17},
         {2000, 800}},
        {"109618", {5'000'000, 4'000'000, 2'000'000, 1'500'000, 1'200'000, 1'000'000, 1'000'000, 1'000'000},
         {0, 1, 3, 7, 10, 12, 15, 15},
         {1000, 500}},
    };
    for (const auto& c : specs) {
        for (std::size_t i = 0; i < c.capacities.size(); ++i) {
            b.add(c.id, hubs[c.hub_index[i]], c.capacities[i], c.own, {0, 1});
        }
    }

    auto& records = b.records();
    // Interleave directions and channels like a real dump.
    for (std::size_t i = records.size(); i > 1; --i) std::swap(records[i - 1], records[rng.below(i)]);

    std::ofstream snap(argv[1]);
    chanfee::write_snapshot_csv(snap, records);

    std::ofstream merchants(argv[2]);
    for (int i = 0; i < 30; ++i) merchants << hubs[i] << '\n';
    for (int i = 0; i < 60; ++i) merchants << others[rng.below(others.size())] << '\n';
    merchants << "125001\n125002\n125003\n";
    std::cerr << "wrote " << records.size() << " records\n";
    return 0;
}
