#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace vcm::server {

struct HttpRequest {
    std::string method;
    std::string target;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string header(const std::string& name) const;
};

// Parses the request line and headers (everything before the blank line).
// Returns nullopt for a malformed head.
std::optional<HttpRequest> parse_http_request(const std::string& head);

bool is_websocket_upgrade(const HttpRequest& req);

// Sec-WebSocket-Accept for a client key.
std::string websocket_accept(const std::string& client_key);
std::string handshake_response(const std::string& client_key);
std::string http_response(int status, const std::string& reason, const std::string& content_type,
                          const std::string& body);

enum Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

struct Frame {
    bool fin = true;
    std::uint8_t opcode = Text;
    std::string payload;
};

class ProtocolViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incremental frame parser. Server side requires masked frames, client side
// unmasked ones.
class FrameDecoder {
public:
    explicit FrameDecoder(bool expect_masked, std::size_t max_payload = 1 << 20)
        : expect_masked_(expect_masked), max_payload_(max_payload) {}
    void feed(const char* data, std::size_t n) { buffer_.append(data, n); }
    // Next complete frame, if buffered. Throws ProtocolViolation.
    std::optional<Frame> next();
    // Next complete text message, reassembling fragments; control frames are
    // returned as-is.
    std::optional<Frame> next_message();

private:
    bool expect_masked_;
    std::size_t max_payload_;
    std::string buffer_;
    std::optional<Frame> partial_;
};

// Frame bytes; a mask key is required for client-to-server frames.
std::string encode_frame(std::uint8_t opcode, const std::string& payload,
                         std::optional<std::uint32_t> mask = std::nullopt);

std::string base64_encode(const std::string& data);

}  // namespace vcm::server
