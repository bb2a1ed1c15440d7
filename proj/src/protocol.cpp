#include "chanfee/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

namespace chanfee {

namespace {

using nlohmann::json;

std::string balance_mode_name(const BalanceInitMode& mode) {
    if (std::holds_alternative<HalfHalf>(mode)) return "half";
    if (std::holds_alternative<UniformRandom>(mode)) return "uniform";
    return "manual";
}

json hello_message(const Env& env) {
    const auto space = env.action_space();
    return {{"type", "hello"},
            {"version", kProtocolVersion},
            {"k", env.k()},
            {"observation_size", 2 * env.k()},
            {"episode_length", env.config().episode_length},
            {"bounds",
             {{"fee_rate_upper", space.fee_rate_upper},
              {"base_fee_upper", space.base_fee_upper},
              {"low", space.low()},
              {"high", space.high()}}}};
}

}  // namespace

json to_json(const EnvConfig& c) {
    json amounts = json::array(), counts = json::array(), epsilons = json::array();
    for (const auto& e : c.traffic.entries()) {
        amounts.push_back(e.amount / kMsatPerSat);
        counts.push_back(e.count);
        epsilons.push_back(e.epsilon);
    }
    json out = {{"node_index", c.node_index},
                {"localization_size", c.localization_size},
                {"fee_rate_upper", c.fee_rate_upper},
                {"base_fee_upper", c.base_fee_upper},
                {"transaction_amounts", amounts},
                {"transaction_counts", counts},
                {"epsilons", epsilons},
                {"episode_length", c.episode_length},
                {"gamma", c.gamma},
                {"balance_init", balance_mode_name(c.balance_init)},
                {"seed", c.seed},
                {"routing_mode", c.routing_mode == RoutingMode::PreFiltered ? "prefiltered" : "in_search"},
                {"charge_sender_fee", c.routing.charge_sender_fee}};
    return out;
}

json to_json(const StepInfo& info) {
    return {{"step", info.step},
            {"settled", info.settled},
            {"failed", info.failed},
            {"routed_amounts", info.routed_amounts},
            {"routed_counts", info.routed_counts},
            {"applied_action", info.applied.flat()},
            {"clipped", info.clipped}};
}

json protocol_error(std::string_view code, std::string_view message) {
    return {{"type", "error"}, {"code", code}, {"message", message}};
}

json Session::handle(const json& request) {
    if (!request.is_object() || !request.contains("type") || !request["type"].is_string()) {
        return protocol_error("E_PARSE", "request must be an object with a string 'type'");
    }
    const auto type = request["type"].get<std::string>();
    if (closed_) return protocol_error("E_ORDER", "session is closed");

    if (type == "hello") {
        greeted_ = true;
        return hello_message(env_);
    }
    if (type == "spec") return {{"type", "spec"}, {"config", to_json(env_.config())}};
    if (type == "close") {
        closed_ = true;
        return {{"type", "closed"}};
    }
    if (type == "reset") {
        if (!greeted_) return protocol_error("E_ORDER", "hello must precede reset");
        std::uint64_t seed = env_.config().seed;
        if (request.contains("seed")) {
            const auto& s = request["seed"];
            if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
                return protocol_error("E_PARSE", "seed must be a non-negative integer");
            }
            seed = s.get<std::uint64_t>();
        }
        return {{"type", "obs"}, {"observation", env_.reset(seed)}};
    }
    if (type == "step") {
        if (!env_.started()) return protocol_error("E_ORDER", "reset must precede step");
        if (env_.done()) return protocol_error("E_ORDER", "episode is over; reset first");
        const auto it = request.find("action");
        if (it == request.end() || !it->is_array()) return protocol_error("E_PARSE", "step needs an 'action' array");
        std::vector<double> flat;
        for (const auto& v : *it) {
            if (!v.is_number()) return protocol_error("E_PARSE", "action entries must be numbers");
            flat.push_back(v.get<double>());
        }
        if (flat.size() != env_.action_space().dimension()) {
            return protocol_error("E_DIM", "action has " + std::to_string(flat.size()) + " entries, expected " +
                                               std::to_string(env_.action_space().dimension()));
        }
        const auto result = env_.step(Action::from_flat(flat));
        return {{"type", "transition"},
                {"observation", result.observation},
                {"reward", result.reward},
                {"done", result.done},
                {"info", to_json(result.info)}};
    }
    return protocol_error("E_PARSE", "unknown request type '" + type + "'");
}

std::string Session::handle_line(std::string_view line) {
    json response;
    try {
        response = handle(json::parse(line));
    } catch (const json::exception& e) {
        response = protocol_error("E_PARSE", e.what());
    } catch (const std::exception& e) {
        response = protocol_error("E_INTERNAL", e.what());
    }
    return response.dump();
}

namespace {

// Runs a session over line-oriented read/write callbacks.
template <typename ReadLine, typename WriteLine>
void run_session(const EnvFactory& factory, ReadLine&& read_line, WriteLine&& write_line) {
    std::optional<Session> session;
    std::string failure;
    try {
        session.emplace(factory());
    } catch (const std::exception& e) {
        failure = e.what();
    }
    std::string line;
    while (read_line(line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!session) {
            write_line(protocol_error("E_CONFIG", failure).dump());
            continue;
        }
        write_line(session->handle_line(line));
        if (session->closed()) break;
    }
}

class SocketLines {
public:
    explicit SocketLines(int fd) : fd_(fd) {}

    bool read(std::string& line) {
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                line.assign(buffer_, 0, nl);
                buffer_.erase(0, nl + 1);
                return true;
            }
            char chunk[4096];
            const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) {
                if (buffer_.empty()) return false;
                line = std::move(buffer_);
                buffer_.clear();
                return true;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void write(const std::string& text) {
        const std::string framed = text + "\n";
        std::size_t sent = 0;
        while (sent < framed.size()) {
            const auto n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return;
            sent += static_cast<std::size_t>(n);
        }
    }

private:
    int fd_;
    std::string buffer_;
};

}  // namespace

void serve_stream(std::istream& in, std::ostream& out, const EnvFactory& factory) {
    run_session(
        factory, [&](std::string& line) { return static_cast<bool>(std::getline(in, line)); },
        [&](const std::string& text) { out << text << '\n' << std::flush; });
}

void serve_tcp(const TcpServerOptions& options, const EnvFactory& factory, const std::atomic<bool>& stop) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options.port);
    if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listener);
        throw InvalidConfig("listen address must be an IPv4 address, got '" + options.host + "'");
    }
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener, 16) != 0) {
        const std::string reason = std::strerror(errno);
        ::close(listener);
        throw Error("cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " + reason);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
    if (options.on_listening) options.on_listening(ntohs(addr.sin_port));

    std::atomic<std::size_t> active{0};
    std::mutex open_mutex;
    std::vector<int> open_fds;
    std::vector<std::thread> workers;
    while (!stop.load()) {
        pollfd pfd{listener, POLLIN, 0};
        if (::poll(&pfd, 1, 100) <= 0) continue;
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) continue;
        if (active.load() >= options.max_sessions) {
            SocketLines(fd).write(protocol_error("E_BUSY", "maximum number of sessions reached").dump());
            ::close(fd);
            continue;
        }
        ++active;
        {
            std::lock_guard lock(open_mutex);
            open_fds.push_back(fd);
        }
        workers.emplace_back([fd, &factory, &active, &open_mutex, &open_fds] {
            SocketLines io(fd);
            run_session(
                factory, [&](std::string& line) { return io.read(line); },
                [&](const std::string& text) { io.write(text); });
            {
                std::lock_guard lock(open_mutex);
                std::erase(open_fds, fd);
            }
            ::close(fd);
            --active;
        });
    }
    ::close(listener);
    {
        // Unblock sessions still waiting in recv().
        std::lock_guard lock(open_mutex);
        for (int fd : open_fds) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& w : workers) w.join();
}

}  // namespace chanfee
