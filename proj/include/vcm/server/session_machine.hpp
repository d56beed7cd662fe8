#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vcm/server/protocol.hpp"
#include "vcm/session_log.hpp"

namespace vcm::server {

enum class Phase { Lobby, RoundOpen, FeedbackPending, Finished, Aborted };

std::string to_string(Phase p);
Phase parse_phase(const std::string& s);

// Everything needed to resume a live session. Partitions come from the
// counter stream (seed, 0, round), so there is no mutable RNG state.
struct SessionState {
    std::string session_id;
    SessionConfig config;
    std::vector<std::string> tokens;  // index = subject id
    Phase phase = Phase::Lobby;
    int round = 0;
    std::vector<bool> joined;
    std::vector<std::optional<Tokens>> submissions;
    std::vector<bool> acks;
    SessionLog log;

    int joined_count() const;
    int submitted_count() const;
    int acked_count() const;
    std::optional<SubjectId> subject_for(const std::string& token) const;
    bool operator==(const SessionState&) const = default;
};

// Throws DomainError for a bad config, or StructuralError unless there is
// exactly one distinct, nonempty token per subject.
SessionState new_session(std::string session_id, const SessionConfig& config,
                         std::vector<std::string> tokens, std::string started_at = {});

// Connection the message arrived on; `subject` is set once it has joined.
struct Sender {
    std::optional<SubjectId> subject;
};

// `to` empty means a reply on the sender's connection.
struct Addressed {
    std::optional<SubjectId> to;
    Outbound message;
};

struct Transition {
    SessionState state;
    std::vector<Addressed> outbound;
    std::optional<SubjectId> bind;  // subject the sender is now joined as
    bool changed = false;
};

Transition handle_message(SessionState state, Sender sender, const Inbound& msg);

// Operator abort: marks the log incomplete and notifies every subject.
Transition abort_session(SessionState state);

// What a subject should be looking at right now; re-sent after a rejoin.
std::vector<Outbound> current_messages(const SessionState& state, SubjectId subject);

// Feedback for `subject` about completed round `round`, rebuilt from the log.
FeedbackView feedback_from_log(const SessionState& state, int round, SubjectId subject);

double total_earnings(const SessionState& state, SubjectId subject);

}  // namespace vcm::server
