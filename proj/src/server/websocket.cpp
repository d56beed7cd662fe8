#include "vcm/server/websocket.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <sstream>

namespace vcm::server {

namespace {

constexpr const char* kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool has_token(const std::string& list, const std::string& token) {
    std::stringstream ss(lower(list));
    std::string item;
    while (std::getline(ss, item, ','))
        if (trim(item) == token) return true;
    return false;
}

}  // namespace

std::string HttpRequest::header(const std::string& name) const {
    const auto it = headers.find(lower(name));
    return it == headers.end() ? std::string() : it->second;
}

std::optional<HttpRequest> parse_http_request(const std::string& head) {
    std::stringstream ss(head);
    std::string line;
    if (!std::getline(ss, line)) return std::nullopt;
    std::stringstream rl(trim(line));
    HttpRequest req;
    std::string version;
    if (!(rl >> req.method >> req.target >> version) || version.rfind("HTTP/1.", 0) != 0) return std::nullopt;
    while (std::getline(ss, line)) {
        line = trim(line);
        if (line.empty()) break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) return std::nullopt;
        req.headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
    }
    return req;
}

bool is_websocket_upgrade(const HttpRequest& req) {
    return req.method == "GET" && has_token(req.header("upgrade"), "websocket") &&
           has_token(req.header("connection"), "upgrade") && !req.header("sec-websocket-key").empty();
}

std::string base64_encode(const std::string& data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(data.data()),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string websocket_accept(const std::string& client_key) {
    const std::string input = client_key + kWebSocketGuid;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(input.data(), input.size(), md, &len, EVP_sha1(), nullptr);
    return base64_encode(std::string(reinterpret_cast<char*>(md), len));
}

std::string handshake_response(const std::string& client_key) {
    return "HTTP/1.1 101 Switching Protocols\r\n"
           "Upgrade: websocket\r\n"
           "Connection: Upgrade\r\n"
           "Sec-WebSocket-Accept: " +
           websocket_accept(client_key) + "\r\n\r\n";
}

std::string http_response(int status, const std::string& reason, const std::string& content_type,
                          const std::string& body) {
    return fmt::format("HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                       status, reason, content_type, body.size(), body);
}

std::optional<Frame> FrameDecoder::next() {
    const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data());
    const std::size_t have = buffer_.size();
    if (have < 2) return std::nullopt;
    Frame f;
    f.fin = (b[0] & 0x80) != 0;
    if (b[0] & 0x70) throw ProtocolViolation("reserved bits set");
    f.opcode = b[0] & 0x0F;
    const bool masked = (b[1] & 0x80) != 0;
    if (masked != expect_masked_) throw ProtocolViolation(masked ? "unexpected mask" : "unmasked client frame");
    std::uint64_t len = b[1] & 0x7F;
    std::size_t pos = 2;
    if (len == 126) {
        if (have < 4) return std::nullopt;
        len = (std::uint64_t(b[2]) << 8) | b[3];
        pos = 4;
    } else if (len == 127) {
        if (have < 10) return std::nullopt;
        len = 0;
        for (int i = 0; i < 8; ++i) len = (len << 8) | b[2 + i];
        pos = 10;
    }
    if (len > max_payload_) throw ProtocolViolation("frame too large");
    if (f.opcode >= 0x8 && (len > 125 || !f.fin)) throw ProtocolViolation("bad control frame");
    unsigned char key[4] = {0, 0, 0, 0};
    if (masked) {
        if (have < pos + 4) return std::nullopt;
        std::copy(b + pos, b + pos + 4, key);
        pos += 4;
    }
    if (have < pos + len) return std::nullopt;
    f.payload.assign(buffer_, pos, static_cast<std::size_t>(len));
    if (masked)
        for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ key[i % 4]);
    buffer_.erase(0, pos + static_cast<std::size_t>(len));
    return f;
}

std::optional<Frame> FrameDecoder::next_message() {
    while (auto f = next()) {
        if (f->opcode >= 0x8) return f;
        if (f->opcode == Continuation) {
            if (!partial_) throw ProtocolViolation("continuation without start");
            partial_->payload += f->payload;
            if (partial_->payload.size() > max_payload_) throw ProtocolViolation("message too large");
            if (f->fin) {
                auto done = std::move(*partial_);
                partial_.reset();
                done.fin = true;
                return done;
            }
            continue;
        }
        if (partial_) throw ProtocolViolation("interleaved data frames");
        if (f->fin) return f;
        partial_ = std::move(f);
    }
    return std::nullopt;
}

std::string encode_frame(std::uint8_t opcode, const std::string& payload, std::optional<std::uint32_t> mask) {
    std::string out;
    out += static_cast<char>(0x80 | opcode);
    const unsigned char mbit = mask ? 0x80 : 0;
    const auto n = payload.size();
    if (n < 126) {
        out += static_cast<char>(mbit | n);
    } else if (n <= 0xFFFF) {
        out += static_cast<char>(mbit | 126);
        out += static_cast<char>((n >> 8) & 0xFF);
        out += static_cast<char>(n & 0xFF);
    } else {
        out += static_cast<char>(mbit | 127);
        for (int i = 7; i >= 0; --i) out += static_cast<char>((std::uint64_t(n) >> (8 * i)) & 0xFF);
    }
    if (!mask) return out + payload;
    const unsigned char key[4] = {static_cast<unsigned char>(*mask >> 24), static_cast<unsigned char>(*mask >> 16),
                                  static_cast<unsigned char>(*mask >> 8), static_cast<unsigned char>(*mask)};
    out.append(reinterpret_cast<const char*>(key), 4);
    for (std::size_t i = 0; i < n; ++i) out += static_cast<char>(payload[i] ^ key[i % 4]);
    return out;
}

}  // namespace vcm::server
