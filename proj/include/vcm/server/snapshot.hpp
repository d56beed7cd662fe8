#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "vcm/server/session_machine.hpp"

namespace vcm::server {

// Raised when a snapshot fails its checksum or cannot be decoded. Carries the
// completed-round count of the newest snapshot that still verifies, if any.
class SnapshotCorrupt : public std::runtime_error {
public:
    SnapshotCorrupt(const std::string& what, std::optional<int> last_valid_round)
        : std::runtime_error(what), last_valid_round(last_valid_round) {}
    std::optional<int> last_valid_round;
};

// Text form: a "vcm-snapshot 1 sha256:<hex>" line, then one JSON line.
std::string serialize_state(const SessionState& state);
SessionState parse_state(const std::string& text);

// Atomic write-then-rename. The file being replaced is kept as <path>.prev.
void save_snapshot(const SessionState& state, const std::string& path);

// Throws IoError if `path` is missing, SnapshotCorrupt if it does not verify.
SessionState load_snapshot(const std::string& path);

std::string sha256_hex(const std::string& data);

}  // namespace vcm::server
