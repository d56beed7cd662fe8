#include "vcm/server/server.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fcntl.h>
#include <filesystem>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>
#include <vector>

#include "vcm/errors.hpp"
#include "vcm/server/snapshot.hpp"

namespace vcm::server {

namespace {

constexpr std::size_t kMaxBuffered = 1 << 20;

std::string now_utc() {
    const auto t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

}  // namespace

std::string bind_address_from_env() {
    const char* v = std::getenv("VCM_BIND_ADDRESS");
    return v && *v ? v : "127.0.0.1";
}

struct SessionServer::Connection {
    enum class Mode { Unknown, WebSocket, Lines, Closing };
    int id = 0;
    int fd = -1;
    Mode mode = Mode::Unknown;
    std::string in;
    std::string out;
    FrameDecoder decoder{true};
    std::optional<SubjectId> subject;
};

SessionServer::SessionServer(SessionState state, ServerOptions options)
    : state_(std::move(state)), options_(std::move(options)) {
    std::filesystem::create_directories(options_.out_dir);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(options_.bind_address, std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw DomainError("bad bind address: " + options_.bind_address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        const std::string err = std::strerror(errno);
        ::close(listen_fd_);
        throw IoError(options_.bind_address + ":" + std::to_string(options_.port), err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
    persist();
}

SessionServer::~SessionServer() {
    for (auto& [id, c] : connections_) ::close(c->fd);
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

std::string SessionServer::snapshot_path() const {
    return (std::filesystem::path(options_.out_dir) / (state_.session_id + ".snapshot")).string();
}

std::string SessionServer::log_path() const {
    return (std::filesystem::path(options_.out_dir) / (state_.session_id + ".jsonl")).string();
}

bool SessionServer::ended() const { return state_.phase == Phase::Finished || state_.phase == Phase::Aborted; }

void SessionServer::persist() {
    save_snapshot(state_, snapshot_path());
    if (ended()) {
        validate_log(state_.log);
        save_log(state_.log, log_path());
    }
}

void SessionServer::run(const std::atomic<bool>& stop) {
    using clock = std::chrono::steady_clock;
    std::optional<clock::time_point> ended_at;
    while (!stop.load()) {
        if (ended()) {
            if (!ended_at) ended_at = clock::now();
            bool participants = false;
            for (const auto& [id, c] : connections_) participants = participants || c->subject.has_value();
            if (!participants || clock::now() - *ended_at > std::chrono::milliseconds(options_.linger_ms)) break;
        }
        std::vector<pollfd> fds{{listen_fd_, POLLIN, 0}};
        std::vector<int> ids;
        for (const auto& [id, c] : connections_) {
            fds.push_back({c->fd, static_cast<short>(POLLIN | (c->out.empty() ? 0 : POLLOUT)), 0});
            ids.push_back(id);
        }
        if (::poll(fds.data(), fds.size(), 100) < 0) {
            if (errno == EINTR) continue;
            throw IoError("poll", std::strerror(errno));
        }
        if (fds[0].revents & POLLIN) accept_new();
        for (std::size_t i = 1; i < fds.size(); ++i) {
            const auto it = connections_.find(ids[i - 1]);
            if (it == connections_.end()) continue;
            auto& c = *it->second;
            if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) on_readable(c);
            if (!connections_.count(ids[i - 1])) continue;
            if (!c.out.empty() && (fds[i].revents & POLLOUT)) {
                const auto w = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
                if (w > 0) c.out.erase(0, static_cast<std::size_t>(w));
                else if (errno != EAGAIN && errno != EWOULDBLOCK) close(c);
            }
            if (connections_.count(ids[i - 1]) && c.mode == Connection::Mode::Closing && c.out.empty()) close(c);
        }
    }
    // Flush what can be flushed without blocking.
    for (auto& [id, c] : connections_)
        if (!c->out.empty()) ::send(c->fd, c->out.data(), c->out.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
}

void SessionServer::accept_new() {
    while (true) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) return;
        set_nonblocking(fd);
        auto c = std::make_unique<Connection>();
        c->id = next_id_++;
        c->fd = fd;
        connections_[c->id] = std::move(c);
    }
}

void SessionServer::close(Connection& c) {
    if (c.subject) {
        const auto it = subject_connection_.find(*c.subject);
        if (it != subject_connection_.end() && it->second == c.id) subject_connection_.erase(it);
    }
    ::close(c.fd);
    connections_.erase(c.id);
}

void SessionServer::on_readable(Connection& c) {
    char buf[8192];
    while (true) {
        const auto n = ::recv(c.fd, buf, sizeof buf, 0);
        if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            if (c.in.size() > kMaxBuffered) return close(c);
            continue;
        }
        if (n == 0) {
            const int id = c.id;
            on_bytes(c);
            if (connections_.count(id)) close(c);
            return;
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
        return close(c);
    }
    on_bytes(c);
}

void SessionServer::on_bytes(Connection& c) {
    using Mode = Connection::Mode;
    const int id = c.id;
    if (c.mode == Mode::Unknown) {
        const auto first = c.in.find_first_not_of(" \r\n\t");
        if (first == std::string::npos) return;
        if (c.in[first] == '{') {
            c.mode = Mode::Lines;
        } else {
            const auto end = c.in.find("\r\n\r\n");
            if (end == std::string::npos) return;
            const auto req = parse_http_request(c.in.substr(0, end + 2));
            c.in.erase(0, end + 4);
            if (!req) {
                c.out += http_response(400, "Bad Request", "text/plain", "bad request\n");
                c.mode = Mode::Closing;
                return;
            }
            if (is_websocket_upgrade(*req)) {
                c.out += handshake_response(req->header("sec-websocket-key"));
                c.mode = Mode::WebSocket;
            } else {
                on_http(c, *req);
                return;
            }
        }
    }
    if (c.mode == Mode::Lines) {
        std::size_t nl;
        while (connections_.count(id) && (nl = c.in.find('\n')) != std::string::npos) {
            auto line = c.in.substr(0, nl);
            c.in.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) on_text(c, line);
        }
        return;
    }
    if (c.mode == Mode::WebSocket) {
        c.decoder.feed(c.in.data(), c.in.size());
        c.in.clear();
        try {
            while (connections_.count(id)) {
                auto f = c.decoder.next_message();
                if (!f) break;
                if (f->opcode == Text || f->opcode == Binary) on_text(c, f->payload);
                else if (f->opcode == Ping) c.out += encode_frame(Pong, f->payload);
                else if (f->opcode == Close) {
                    c.out += encode_frame(Close, f->payload.substr(0, 2));
                    c.mode = Mode::Closing;
                    break;
                }
            }
        } catch (const ProtocolViolation&) {
            c.out += encode_frame(Close, std::string("\x03\xea", 2));
            c.mode = Mode::Closing;
        }
    }
}

void SessionServer::send_text(Connection& c, const std::string& text) {
    if (c.mode == Connection::Mode::WebSocket) c.out += encode_frame(Text, text);
    else if (c.mode == Connection::Mode::Lines) c.out += text + "\n";
}

void SessionServer::on_text(Connection& c, const std::string& text) {
    apply(&c, handle_message(std::move(state_), Sender{c.subject}, parse_inbound(text)));
}

void SessionServer::apply(Connection* sender, Transition tr) {
    state_ = std::move(tr.state);
    if (tr.changed) {
        if (ended() && state_.log.header.finished_at.empty()) state_.log.header.finished_at = now_utc();
        persist();
    }
    if (sender && tr.bind) {
        const auto prev = subject_connection_.find(*tr.bind);
        if (prev != subject_connection_.end() && prev->second != sender->id) {
            // A rejoin takes over; the stale connection is dropped.
            const auto old = connections_.find(prev->second);
            if (old != connections_.end()) {
                old->second->subject.reset();
                old->second->mode = Connection::Mode::Closing;
            }
        }
        sender->subject = tr.bind;
        subject_connection_[*tr.bind] = sender->id;
    }
    for (const auto& m : tr.outbound) {
        const auto text = encode(m.message);
        if (!m.to) {
            if (sender) send_text(*sender, text);
            continue;
        }
        const auto it = subject_connection_.find(*m.to);
        if (it == subject_connection_.end()) continue;
        const auto c = connections_.find(it->second);
        if (c != connections_.end()) send_text(*c->second, text);
    }
}

std::string SessionServer::status_json() const {
    int connected = static_cast<int>(subject_connection_.size());
    nlohmann::ordered_json j{{"session_id", state_.session_id},
                             {"phase", to_string(state_.phase)},
                             {"round", state_.round},
                             {"rounds", state_.config.rounds},
                             {"treatment", to_string(state_.config.treatment)},
                             {"joined", state_.joined_count()},
                             {"connected", connected},
                             {"submitted", state_.submitted_count()},
                             {"acked", state_.acked_count()},
                             {"completed_rounds", state_.log.completed_rounds()}};
    return j.dump() + "\n";
}

void SessionServer::on_http(Connection& c, const HttpRequest& req) {
    c.mode = Connection::Mode::Closing;
    const bool authorised =
        options_.operator_token.empty() || req.header("x-operator-token") == options_.operator_token;
    if (req.target == "/operator/status" || req.target == "/operator/abort") {
        if (!authorised) {
            c.out += http_response(403, "Forbidden", "text/plain", "forbidden\n");
            return;
        }
        if (req.target == "/operator/status" && req.method == "GET") {
            c.out += http_response(200, "OK", "application/json", status_json());
            return;
        }
        if (req.target == "/operator/abort" && req.method == "POST") {
            apply(nullptr, abort_session(std::move(state_)));
            c.out += http_response(200, "OK", "application/json", status_json());
            return;
        }
        c.out += http_response(405, "Method Not Allowed", "text/plain", "method not allowed\n");
        return;
    }
    c.out += http_response(404, "Not Found", "text/plain", "not found\n");
}

}  // namespace vcm::server
