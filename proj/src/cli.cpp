#include "chanfee/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chanfee/baselines.hpp"
#include "chanfee/env.hpp"
#include "chanfee/protocol.hpp"

namespace chanfee {

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Flag, config-file and default values land here; CLI11 applies the
// precedence flags > config file > defaults.
struct RunConfig {
    std::string snapshot;
    std::string merchants;
    EnvConfig env;
    std::vector<std::int64_t> amounts_sat{10'000, 50'000, 100'000};
    std::vector<std::uint32_t> counts{10, 10, 10};
    std::vector<double> epsilons{0.6, 0.6, 0.6};
    std::string balance_init = "half";
    std::string routing = "prefiltered";
    bool charge_sender_fee = false;
};

void resolve(RunConfig& rc) {
    if (rc.amounts_sat.size() != rc.counts.size() || rc.amounts_sat.size() != rc.epsilons.size()) {
        throw InvalidConfig("transaction_amounts, transaction_counts and epsilons must have the same length");
    }
    std::vector<TrafficEntry> entries;
    for (std::size_t i = 0; i < rc.amounts_sat.size(); ++i) {
        entries.push_back({rc.counts[i], rc.amounts_sat[i] * kMsatPerSat, rc.epsilons[i]});
    }
    rc.env.traffic = TrafficSpec(std::move(entries));
    if (rc.balance_init == "half") {
        rc.env.balance_init = HalfHalf{};
    } else if (rc.balance_init == "uniform") {
        rc.env.balance_init = UniformRandom{0};
    } else {
        throw InvalidConfig("balance_init must be 'half' or 'uniform'");
    }
    if (rc.routing == "prefiltered") {
        rc.env.routing_mode = RoutingMode::PreFiltered;
    } else if (rc.routing == "in_search") {
        rc.env.routing_mode = RoutingMode::InSearch;
    } else {
        throw InvalidConfig("routing must be 'prefiltered' or 'in_search'");
    }
    rc.env.routing.charge_sender_fee = rc.charge_sender_fee;
    rc.env.validate();
    if (rc.snapshot.empty()) throw InvalidConfig("--snapshot is required");
    if (!std::filesystem::is_regular_file(rc.snapshot)) throw InvalidConfig("snapshot '" + rc.snapshot + "' not found");
    if (!rc.merchants.empty() && !std::filesystem::is_regular_file(rc.merchants)) {
        throw InvalidConfig("merchants file '" + rc.merchants + "' not found");
    }
}

std::shared_ptr<const NetworkGraph> load(const RunConfig& rc) {
    return std::make_shared<const NetworkGraph>(load_network(rc.snapshot, rc.merchants));
}

nlohmann::json manifest(const std::string& command, const RunConfig& rc, const std::vector<std::string>& args) {
    nlohmann::json m = {{"tool", "chanfee"},
                        {"version", kToolVersion},
                        {"command", command},
                        {"argv", args},
                        {"config", to_json(rc.env)},
                        {"snapshot", {{"path", rc.snapshot}, {"sha256", sha256_file(rc.snapshot)}}}};
    if (!rc.merchants.empty()) m["merchants"] = {{"path", rc.merchants}, {"sha256", sha256_file(rc.merchants)}};
    return m;
}

void write_manifest(const std::string& out_path, std::string manifest_path, const nlohmann::json& m) {
    if (manifest_path.empty() && !out_path.empty()) manifest_path = out_path + ".manifest.json";
    if (manifest_path.empty()) return;
    std::ofstream f(manifest_path);
    if (!f) throw Error("cannot write manifest '" + manifest_path + "'");
    f << m.dump(2) << '\n';
}

// Writes to a file when `path` is set, else to `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error("cannot write '" + path + "'");
        }
        out_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& operator*() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_;
};

std::string format_number(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

template <typename T>
double median(std::vector<T> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2]));
}

template <typename T>
T mode(const std::vector<T>& v) {
    std::map<T, std::size_t> counts;
    for (const auto& x : v) ++counts[x];
    T best{};
    std::size_t best_count = 0;
    for (const auto& [x, n] : counts) {
        if (n > best_count) {
            best = x;
            best_count = n;
        }
    }
    return best;
}

template <typename T>
double mean(const std::vector<T>& v) {
    if (v.empty()) return 0;
    double s = 0;
    for (const auto& x : v) s += static_cast<double>(x);
    return s / static_cast<double>(v.size());
}

int cmd_info(const RunConfig& rc, bool node_given, std::ostream& out) {
    const auto records = parse_snapshot(rc.snapshot);
    const auto channels = init_balances(aggregate_channels(records), HalfHalf{});
    MerchantSet merchants;
    if (!rc.merchants.empty()) merchants = parse_merchants(rc.merchants, node_ids(records));
    const NetworkGraph g(channels, merchants.ids);

    Msat total = 0;
    for (const auto& c : g.channels()) total += c.capacity;
    std::vector<double> rates;
    std::vector<Msat> bases;
    for (const auto& c : g.channels()) {
        for (const auto& p : c.policy) {
            rates.push_back(p.fee_rate);
            bases.push_back(p.base_fee);
        }
    }
    out << "snapshot: " << rc.snapshot << '\n'
        << "records: " << records.size() << '\n'
        << "nodes: " << g.node_count() << '\n'
        << "channels: " << g.channel_count() << '\n'
        << "capacity_sat: " << total / kMsatPerSat << '\n'
        << "merchants: " << g.merchants().size() << " (unknown: " << g.unknown_merchants() << ")\n"
        << "fee_rate_ppm: mean " << format_number(mean(rates)) << " median " << format_number(median(rates))
        << " mode " << format_number(mode(rates)) << '\n'
        << "base_fee_msat: mean " << format_number(mean(bases)) << " median " << format_number(median(bases))
        << " mode " << mode(bases) << '\n';

    const auto center = g.find(rc.env.node_index);
    if (!center) {
        if (node_given) throw UnknownCenter(rc.env.node_index);
        return 0;
    }
    Msat node_capacity = 0;
    for (const auto& inc : g.incident(*center)) node_capacity += g.channel(inc.channel).capacity;
    out << "node " << rc.env.node_index << ": " << g.incident(*center).size() << " channels, capacity "
        << node_capacity / kMsatPerSat << " sat\n";
    for (const auto& inc : g.incident(*center)) {
        const auto& c = g.channel(inc.channel);
        const auto& own = c.policy[inc.side];
        const auto& peer = c.policy[1 - inc.side];
        out << "  peer " << g.id(inc.peer) << " capacity_sat " << c.capacity / kMsatPerSat << " fee_rate "
            << format_number(own.fee_rate) << " base_fee " << own.base_fee << " peer_fee_rate "
            << format_number(peer.fee_rate) << " peer_base_fee " << peer.base_fee << '\n';
    }
    return 0;
}

int cmd_localize(const RunConfig& rc, const std::string& out_path, std::ostream& out, std::ostream& err) {
    const auto g = load(rc);
    const auto local = localize(*g, rc.env.node_index, rc.env.localization_size);
    const auto channels = local.to_channels();
    Sink sink(out_path, out);
    write_snapshot_csv(*sink, to_records(channels));
    err << "localized around " << rc.env.node_index << ": " << local.node_count() << " nodes, "
        << local.channel_count() << " channels\n";
    return 0;
}

struct SimulateArgs {
    std::uint32_t rounds = 1;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::string out;
    std::string manifest;
};

int cmd_simulate(RunConfig rc, const SimulateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
    if (a.alpha.has_value() != a.beta.has_value()) throw InvalidConfig("--alpha and --beta must be given together");
    rc.env.episode_length = std::max(rc.env.episode_length, a.rounds);
    Env env(load(rc), rc.env);
    env.reset(rc.env.seed);
    StaticPolicy policy(a.alpha ? StaticSource{ExplicitFees{*a.alpha, *a.beta}} : StaticSource{SnapshotFees{}});
    policy.begin_episode(env);

    Sink sink(a.out, out);
    *sink << "round,channel,peer,capacity,balance,routed_amount,routed_count,settled,failed,reward\n";
    Observation obs;
    for (std::uint32_t round = 1; round <= a.rounds; ++round) {
        const auto result = env.step(policy.act(obs), policy.clipping());
        for (std::size_t i = 0; i < env.k(); ++i) {
            const auto& c = env.graph().channel(env.channels()[i]);
            const auto peer = c.ends[0] == env.center() ? c.ends[1] : c.ends[0];
            *sink << round << ',' << i << ',' << env.graph().id(peer) << ',' << c.capacity << ','
                  << result.observation[i] << ',' << result.info.routed_amounts[i] << ','
                  << result.info.routed_counts[i] << ',' << result.info.settled << ',' << result.info.failed << ','
                  << result.reward << '\n';
        }
        obs = result.observation;
    }
    write_manifest(a.out, a.manifest, manifest("simulate", rc, args));
    return 0;
}

struct EvaluateArgs {
    std::string policy = "static";
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> alpha_max;
    std::uint32_t episodes = 1;
    std::uint32_t seeds = 5;
    std::uint32_t budget = 500;
    std::string out;
    std::string manifest;
};

int cmd_evaluate(const RunConfig& rc, const EvaluateArgs& a, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
    std::unique_ptr<Policy> policy;
    if (a.policy != "random_search") policy = make_policy(a.policy, a.alpha, a.beta, a.alpha_max);
    const Env env(load(rc), rc.env);

    std::vector<std::uint64_t> seeds;
    for (std::uint32_t i = 0; i < a.seeds; ++i) seeds.push_back(rc.env.seed + i);

    // One task per seed, each with its own environment and policy; rows
    // are collected in seed order.
    std::vector<std::future<std::vector<EpisodeIncome>>> tasks;
    for (auto seed : seeds) {
        tasks.push_back(std::async(std::launch::async, [&, seed] {
            if (!policy) {
                const auto best = random_search_agent(env, a.budget, seed);
                return std::vector<EpisodeIncome>{{seed, 0, best.income, 0}};
            }
            auto own = make_policy(a.policy, a.alpha, a.beta, a.alpha_max);
            const std::vector<std::uint64_t> one{seed};
            return evaluate_policy(env, *own, a.episodes, rc.env.gamma, one).runs;
        }));
    }
    std::vector<EpisodeIncome> runs;
    for (auto& t : tasks) {
        const auto part = t.get();
        runs.insert(runs.end(), part.begin(), part.end());
    }
    const std::string label = policy ? policy->name() : a.policy;

    Sink sink(a.out, out);
    *sink << "node,policy,seed,episode,discounted_income\n";
    double sum = 0;
    for (const auto& r : runs) {
        *sink << rc.env.node_index << ',' << label << ',' << r.seed << ',' << r.episode << ','
              << format_number(r.discounted_income) << '\n';
        sum += r.discounted_income;
    }
    const double avg = runs.empty() ? 0 : sum / static_cast<double>(runs.size());
    double sq = 0;
    for (const auto& r : runs) sq += (r.discounted_income - avg) * (r.discounted_income - avg);
    err << label << " on " << rc.env.node_index << ": mean " << format_number(avg) << " std "
        << format_number(runs.empty() ? 0 : std::sqrt(sq / static_cast<double>(runs.size()))) << " over "
        << runs.size() << " runs\n";
    write_manifest(a.out, a.manifest, manifest("evaluate", rc, args));
    return 0;
}

struct ServeArgs {
    std::string listen;
    std::size_t max_sessions = 8;
};

int cmd_serve(const RunConfig& rc, const ServeArgs& a, std::ostream& out, std::ostream& err) {
    const auto network = load(rc);
    const auto config = rc.env;
    const EnvFactory factory = [network, config] { return Env(network, config); };
    if (a.listen.empty()) {
        serve_stream(std::cin, out, factory);
        return 0;
    }
    const auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) throw InvalidConfig("--listen expects host:port");
    TcpServerOptions options;
    options.host = a.listen.substr(0, colon);
    try {
        options.port = static_cast<std::uint16_t>(std::stoul(a.listen.substr(colon + 1)));
    } catch (const std::exception&) {
        throw InvalidConfig("--listen has an invalid port");
    }
    options.max_sessions = a.max_sessions;
    options.on_listening = [&](std::uint16_t port) {
        err << "listening on " << options.host << ':' << port << '\n' << std::flush;
    };
    std::atomic<bool> stop{false};
    serve_tcp(options, factory, stop);
    return 0;
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Payment-channel network simulator and fee-setting environment", "chanfee"};
    app.set_config("--config", "", "TOML/INI file with default-table keys (see configs/defaults.toml)");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    RunConfig rc;
    app.add_option("--snapshot", rc.snapshot, "Channel snapshot (CSV or JSON lines)");
    app.add_option("--merchants", rc.merchants, "Merchant node ids, one per line");
    auto* node_opt = app.add_option("--node,--node_index", rc.env.node_index, "Center node id");
    app.add_option("--size,--localization_size", rc.env.localization_size, "Nodes kept around the center")
        ->check(CLI::PositiveNumber);
    app.add_option("--fee_rate_upper,--fee_rate_upper_bound", rc.env.fee_rate_upper, "Exclusive fee-rate bound (ppm)");
    app.add_option("--base_fee_upper,--base_fee_upper_bound", rc.env.base_fee_upper, "Exclusive base-fee bound (msat)");
    app.add_option("--transaction_amounts", rc.amounts_sat, "Amount per transaction type (sat)")->delimiter(',');
    app.add_option("--transaction_counts", rc.counts, "Transactions per type and round")->delimiter(',');
    app.add_option("--epsilons", rc.epsilons, "Merchant-receiver probability per type")->delimiter(',');
    app.add_option("--episode_length", rc.env.episode_length, "Steps per episode");
    app.add_option("--gamma", rc.env.gamma, "Discount factor");
    app.add_option("--balance_init", rc.balance_init, "half | uniform");
    app.add_option("--routing", rc.routing, "prefiltered | in_search");
    app.add_flag("--charge_sender_fee", rc.charge_sender_fee, "Charge the sender its own first-hop fee");
    app.add_option("--seed", rc.env.seed, "Base random seed");

    auto* info = app.add_subcommand("info", "Snapshot statistics and center-node summary");

    std::string localize_out;
    auto* loc = app.add_subcommand("localize", "Write the localized subgraph as a snapshot CSV");
    loc->add_option("--out", localize_out, "Output file (default stdout)");

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Run rounds with static center fees and report per channel");
    sim->add_option("--rounds", sim_args.rounds, "Number of rounds")->check(CLI::PositiveNumber);
    sim->add_option("--alpha", sim_args.alpha, "Center fee rate (ppm); default: snapshot fees");
    sim->add_option("--beta", sim_args.beta, "Center base fee (msat)");
    sim->add_option("--out", sim_args.out, "CSV output (default stdout)");
    sim->add_option("--manifest", sim_args.manifest, "Run manifest path (default <out>.manifest.json)");

    EvaluateArgs eval_args;
    auto* eval = app.add_subcommand("evaluate", "Evaluate a baseline policy, one CSV row per episode");
    eval->add_option("--policy", eval_args.policy, "static | match_peer | proportional | random_search")
        ->check(CLI::IsMember({"static", "match_peer", "proportional", "random_search"}));
    eval->add_option("--alpha", eval_args.alpha, "Static fee rate (ppm)");
    eval->add_option("--beta", eval_args.beta, "Static base fee (msat)");
    eval->add_option("--alpha_max", eval_args.alpha_max, "Proportional scale (default fee_rate_upper)");
    eval->add_option("--episodes", eval_args.episodes, "Episodes per seed")->check(CLI::PositiveNumber);
    eval->add_option("--seeds", eval_args.seeds, "Number of consecutive seeds from --seed")->check(CLI::PositiveNumber);
    eval->add_option("--budget", eval_args.budget, "Random-search samples")->check(CLI::PositiveNumber);
    eval->add_option("--out", eval_args.out, "CSV output (default stdout)");
    eval->add_option("--manifest", eval_args.manifest, "Run manifest path (default <out>.manifest.json)");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Serve the environment protocol on stdio or TCP");
    serve->add_option("--listen", serve_args.listen, "host:port; stdio when omitted");
    serve->add_option("--max_sessions", serve_args.max_sessions, "Concurrent TCP sessions")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        resolve(rc);
        if (*info) return cmd_info(rc, node_opt->count() > 0, out);
        if (*loc) return cmd_localize(rc, localize_out, out, err);
        if (*sim) return cmd_simulate(rc, sim_args, args, out);
        if (*eval) return cmd_evaluate(rc, eval_args, args, out, err);
        if (*serve) return cmd_serve(rc, serve_args, out, err);
    } catch (const InvalidConfig& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UnknownCenter& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NodeHasNoChannels& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace chanfee
