#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "vcm/game.hpp"

namespace vcm::server {

inline constexpr int kProtocolSchema = 1;

// Inbound records, one JSON object per frame, tagged by "type".
struct Join {
    std::string token;
    int schema = kProtocolSchema;
};
struct SubmitAllocation {
    Tokens private_tokens = 0;
    Tokens group_tokens = 0;
};
struct AckFeedback {};
// A frame that could not be decoded into a well-formed request.
struct Malformed {
    std::string reason;  // "malformed" or "not-integer"
    std::string type;    // tag if one was readable
};

using Inbound = std::variant<Join, SubmitAllocation, AckFeedback, Malformed>;

Inbound parse_inbound(const std::string& text);
std::string encode(const Inbound& msg);

// Outbound records.
struct JoinAccepted {
    int schema = kProtocolSchema;
    Treatment treatment = Treatment::GroupFeedback;
    Tokens endowment = 0;
    double multiplier = 0;
    int group_size = 0;
    int session_size = 0;
    int rounds = 0;
    int joined = 0;
};
struct RejectJoin {
    std::string reason;
};
struct EndowmentNotice {
    int round = 0;
    Tokens endowment = 0;
};
struct SubmissionAccepted {
    int round = 0;
};
struct RejectSubmission {
    std::string reason;
    int round = 0;
};
struct RejectMessage {
    std::string reason;
    std::string type;
};
struct RoundFeedback {
    FeedbackView view;
};
struct SessionComplete {
    double total_tokens = 0;
    std::string currency_amount;
};
struct SessionAborted {
    int completed_rounds = 0;
};

using Outbound = std::variant<JoinAccepted, RejectJoin, EndowmentNotice, SubmissionAccepted,
                              RejectSubmission, RejectMessage, RoundFeedback, SessionComplete,
                              SessionAborted>;

nlohmann::ordered_json to_json(const Outbound& msg);
std::string encode(const Outbound& msg);
std::string type_name(const Outbound& msg);

// Rejection reason codes.
namespace reason {
inline constexpr const char* sum_mismatch = "sum-mismatch";
inline constexpr const char* negative = "negative";
inline constexpr const char* not_integer = "not-integer";
inline constexpr const char* out_of_phase = "out-of-phase";
inline constexpr const char* duplicate = "duplicate";
inline constexpr const char* malformed = "malformed";
inline constexpr const char* unknown_token = "unknown-token";
inline constexpr const char* not_joined = "not-joined";
inline constexpr const char* schema_mismatch = "schema-mismatch";
}  // namespace reason

}  // namespace vcm::server
