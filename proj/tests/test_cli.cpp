#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chanfee/cli.hpp"
#include "chanfee/snapshot.hpp"
#include "support.hpp"

using namespace chanfee;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args, bool with_data = true) {
    if (with_data) {
        args.insert(args.begin() + 1, {"--snapshot", testing::kSnapshot, "--merchants", testing::kMerchants});
    }
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "chanfee_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("info reports the centre's channels") {
    const auto r = run({"info", "--node", "97851"});
    CHECK(r.code == 0);
    CHECK(r.out.find("node 97851: 6 channels, capacity 28154272 sat") != std::string::npos);
    CHECK(r.out.find("unknown: 3") != std::string::npos);

    const auto c = run({"info", "--node", "109618"});
    CHECK(c.out.find("7 channels, capacity 16700000 sat") != std::string::npos);
}

TEST_CASE("evaluate with low static fees prints positive rows") {
    const auto r = run({"evaluate", "--policy", "static", "--alpha", "1", "--beta", "1000", "--node", "97851", "--seeds", "5"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "node,policy,seed,episode,discounted_income");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto value = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
        CHECK(value > 0);
        CHECK(rows[i].starts_with("97851,static," + std::to_string(i - 1) + ",0,"));
    }
}

TEST_CASE("localize to one node yields no channels") {
    const auto out = scratch("one.csv");
    const auto r = run({"localize", "--node", "97851", "--size", "1", "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("1 nodes, 0 channels") != std::string::npos);
    std::ifstream in(out);
    std::string header, extra;
    std::getline(in, header);
    CHECK(header == "source_id,target_id,channel_id,capacity,base_fee,fee_rate,min_htlc,last_update");
    CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("localized output re-parses to the same subgraph") {
    const auto out = scratch("local.csv");
    REQUIRE(run({"localize", "--node", "97851", "--size", "50", "--out", out.string()}).code == 0);
    const auto channels = aggregate_channels(parse_snapshot(out));
    const auto g = load_network(testing::kSnapshot);
    const auto l = localize(g, "97851", 50);
    auto expected = l.to_channels();
    for (auto& c : expected) c.balance = {0, 0};
    CHECK(channels == expected);
}

TEST_CASE("simulate writes a CSV and a manifest") {
    const auto out = scratch("sim.csv");
    const auto r = run({"simulate", "--node", "97851", "--rounds", "3", "--alpha", "1", "--beta", "1000", "--seed", "4",
                        "--out", out.string()});
    REQUIRE(r.code == 0);
    std::ifstream in(out);
    std::stringstream text;
    text << in.rdbuf();
    const auto rows = lines(text.str());
    REQUIRE(rows.size() == 1 + 3 * 6);
    CHECK(rows[0] == "round,channel,peer,capacity,balance,routed_amount,routed_count,settled,failed,reward");

    std::ifstream mf(out.string() + ".manifest.json");
    const auto manifest = nlohmann::json::parse(mf);
    CHECK(manifest["config"]["seed"] == 4);
    CHECK(manifest["config"]["node_index"] == "97851");
    CHECK(manifest["snapshot"]["sha256"] == sha256_file(testing::kSnapshot));
    CHECK(manifest["merchants"]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("sha256 of a known string") {
    const auto p = scratch("abc.txt");
    std::ofstream(p) << "abc";
    CHECK(sha256_file(p.string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config file supplies defaults and flags override it") {
    const auto conf = scratch("run.toml");
    std::ofstream(conf) << "node_index = \"109618\"\nlocalization_size = 40\nepisode_length = 7\n";
    const auto out = scratch("conf.csv");
    REQUIRE(run({"evaluate", "--config", conf.string(), "--seeds", "1", "--out", out.string()}).code == 0);
    std::ifstream mf(out.string() + ".manifest.json");
    const auto m = nlohmann::json::parse(mf);
    CHECK(m["config"]["node_index"] == "109618");
    CHECK(m["config"]["localization_size"] == 40);
    CHECK(m["config"]["episode_length"] == 7);

    REQUIRE(run({"evaluate", "--config", conf.string(), "--node", "71555", "--seeds", "1", "--out", out.string()}).code == 0);
    std::ifstream mf2(out.string() + ".manifest.json");
    CHECK(nlohmann::json::parse(mf2)["config"]["node_index"] == "71555");
}

TEST_CASE("shipped defaults file matches the built-in defaults") {
    const auto shipped = testing::data_path("../configs/defaults.toml").string();
    auto config_of = [](std::vector<std::string> args) {
        const auto out = scratch("defaults.csv");
        args.insert(args.begin(), {"evaluate", "--seeds", "1", "--episode_length", "2", "--out", out.string()});
        REQUIRE(run(args).code == 0);
        std::ifstream mf(out.string() + ".manifest.json");
        return nlohmann::json::parse(mf)["config"];
    };
    const auto plain = config_of({});
    const auto from_file = config_of({"--config", shipped});
    CHECK(plain == from_file);
    CHECK(plain["node_index"] == "76620");
}

TEST_CASE("traffic lists are parsed in sat") {
    const auto out = scratch("traffic.csv");
    REQUIRE(run({"evaluate", "--node", "97851", "--transaction_amounts", "1000,2000", "--transaction_counts", "3,4",
                 "--epsilons", "0.5,0.1", "--episode_length", "2", "--seeds", "1", "--out", out.string()})
                .code == 0);
    std::ifstream mf(out.string() + ".manifest.json");
    const auto m = nlohmann::json::parse(mf);
    CHECK(m["config"]["transaction_amounts"] == nlohmann::json::array({1000, 2000}));
    CHECK(m["config"]["transaction_counts"] == nlohmann::json::array({3, 4}));
}

TEST_CASE("exit codes") {
    CHECK(run({"info", "--node", "nope"}).code == 2);
    CHECK(run({"evaluate", "--gamma", "3"}).code == 2);
    CHECK(run({"evaluate", "--transaction_amounts", "1,2", "--transaction_counts", "1"}).code == 2);
    CHECK(run({"evaluate", "--policy", "ppo"}).code == 2);
    CHECK(run({"evaluate", "--policy", "static", "--alpha", "1"}).code == 2);
    CHECK(run({"info"}, false).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"info", "--snapshot", "/nonexistent/file.csv"}, false).code == 2);
    CHECK(run({"simulate", "--node", "97851", "--out", "/nonexistent/dir/x.csv"}).code == 1);
    const auto help = run({"--help"}, false);
    CHECK(help.code == 0);
    CHECK(help.out.find("evaluate") != std::string::npos);
}
