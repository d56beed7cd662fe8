#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "vcm/server/session_machine.hpp"
#include "vcm/server/websocket.hpp"

namespace vcm::server {

struct ServerOptions {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::string out_dir = ".";
    // Required in an X-Operator-Token header on operator requests when set.
    std::string operator_token;
    // After the session ends, keep serving re-deliveries this long at most.
    int linger_ms = 30000;
};

// Reads VCM_BIND_ADDRESS, defaulting to 127.0.0.1.
std::string bind_address_from_env();

// Single-threaded poll loop serving one session. Participants connect with a
// WebSocket upgrade (any path) or send newline-terminated JSON directly;
// GET /operator/status and POST /operator/abort answer plain HTTP on the same
// port. The state is snapshotted before any reply to the change is sent.
class SessionServer {
public:
    SessionServer(SessionState state, ServerOptions options);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    const SessionState& state() const noexcept { return state_; }
    std::string snapshot_path() const;
    std::string log_path() const;

    // Serves until the session has ended and every participant has
    // disconnected (or the linger time passes), or until `stop` is set.
    void run(const std::atomic<bool>& stop);

private:
    struct Connection;

    void accept_new();
    void on_readable(Connection& c);
    void on_bytes(Connection& c);
    void on_text(Connection& c, const std::string& text);
    void on_http(Connection& c, const HttpRequest& req);
    void apply(Connection* sender, Transition tr);
    void send_text(Connection& c, const std::string& text);
    void persist();
    void close(Connection& c);
    std::string status_json() const;
    bool ended() const;

    SessionState state_;
    ServerOptions options_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    int next_id_ = 0;
    std::map<int, std::unique_ptr<Connection>> connections_;
    std::map<SubjectId, int> subject_connection_;
};

}  // namespace vcm::server
