#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "chanfee/env.hpp"

namespace chanfee {

inline constexpr const char* kProtocolVersion = "chanfee-env/1";

nlohmann::json to_json(const EnvConfig& config);
nlohmann::json to_json(const StepInfo& info);

/// One client session over the line protocol (docs/protocol.md). Owns its
/// environment; every request yields exactly one response object.
class Session {
public:
    explicit Session(Env env) : env_(std::move(env)) {}

    nlohmann::json handle(const nlohmann::json& request);
    /// Parses one request line; never throws.
    std::string handle_line(std::string_view line);

    bool closed() const { return closed_; }
    const Env& env() const { return env_; }

private:
    Env env_;
    bool greeted_ = false;
    bool closed_ = false;
};

nlohmann::json protocol_error(std::string_view code, std::string_view message);

using EnvFactory = std::function<Env()>;

/// Serves one session over a pair of streams until close or EOF.
void serve_stream(std::istream& in, std::ostream& out, const EnvFactory& factory);

struct TcpServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::size_t max_sessions = 8;
    /// Called once with the bound port after listen() succeeds.
    std::function<void(std::uint16_t)> on_listening;
};

/// Accepts connections until `stop` becomes true; one thread per session.
/// Connections beyond max_sessions receive an E_BUSY error and are closed.
void serve_tcp(const TcpServerOptions& options, const EnvFactory& factory, const std::atomic<bool>& stop);

}  // namespace chanfee
