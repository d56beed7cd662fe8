#include "vcm/server/protocol.hpp"

namespace vcm::server {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Reads an integer token field; a number with a fraction or a numeric
// string counts as not-integer, anything else as malformed.
std::optional<std::string> read_tokens(const nlohmann::json& j, const char* key, Tokens& out) {
    const auto it = j.find(key);
    if (it == j.end()) return reason::malformed;
    if (it->is_number_integer()) {
        out = it->get<Tokens>();
        return std::nullopt;
    }
    if (it->is_number()) return reason::not_integer;
    return reason::malformed;
}

nlohmann::ordered_json panel_json(const std::vector<PanelEntry>& panel) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : panel) arr.push_back({{"contribution", e.contribution}, {"own", e.own}});
    return arr;
}

}  // namespace

Inbound parse_inbound(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        return Malformed{reason::malformed, ""};
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        return Malformed{reason::malformed, ""};
    const auto type = j["type"].get<std::string>();
    if (type == "Join") {
        if (!j.contains("token") || !j["token"].is_string()) return Malformed{reason::malformed, type};
        Join m;
        m.token = j["token"].get<std::string>();
        if (j.contains("schema")) {
            if (!j["schema"].is_number_integer()) return Malformed{reason::malformed, type};
            m.schema = j["schema"].get<int>();
        }
        return m;
    }
    if (type == "SubmitAllocation") {
        SubmitAllocation m;
        if (auto r = read_tokens(j, "private", m.private_tokens)) return Malformed{*r, type};
        if (auto r = read_tokens(j, "group", m.group_tokens)) return Malformed{*r, type};
        return m;
    }
    if (type == "AckFeedback") return AckFeedback{};
    return Malformed{reason::malformed, type};
}

std::string encode(const Inbound& msg) {
    return std::visit(
        overloaded{
            [](const Join& m) {
                return nlohmann::ordered_json{{"type", "Join"}, {"token", m.token}, {"schema", m.schema}}.dump();
            },
            [](const SubmitAllocation& m) {
                return nlohmann::ordered_json{
                    {"type", "SubmitAllocation"}, {"private", m.private_tokens}, {"group", m.group_tokens}}
                    .dump();
            },
            [](const AckFeedback&) { return nlohmann::ordered_json{{"type", "AckFeedback"}}.dump(); },
            [](const Malformed& m) { return nlohmann::ordered_json{{"type", m.type}}.dump(); },
        },
        msg);
}

nlohmann::ordered_json to_json(const Outbound& msg) {
    using oj = nlohmann::ordered_json;
    return std::visit(
        overloaded{
            [](const JoinAccepted& m) {
                return oj{{"type", "JoinAccepted"},   {"schema", m.schema},
                          {"treatment", to_string(m.treatment)},
                          {"endowment", m.endowment}, {"multiplier", m.multiplier},
                          {"group_size", m.group_size}, {"session_size", m.session_size},
                          {"rounds", m.rounds},       {"joined", m.joined}};
            },
            [](const RejectJoin& m) { return oj{{"type", "RejectJoin"}, {"reason", m.reason}}; },
            [](const EndowmentNotice& m) {
                return oj{{"type", "EndowmentNotice"}, {"round", m.round}, {"endowment", m.endowment}};
            },
            [](const SubmissionAccepted& m) { return oj{{"type", "SubmissionAccepted"}, {"round", m.round}}; },
            [](const RejectSubmission& m) {
                return oj{{"type", "RejectSubmission"}, {"reason", m.reason}, {"round", m.round}};
            },
            [](const RejectMessage& m) {
                return oj{{"type", "RejectMessage"}, {"reason", m.reason}, {"request", m.type}};
            },
            [](const RoundFeedback& m) {
                const auto& v = m.view;
                oj j{{"type", "RoundFeedback"},
                     {"round", v.round},
                     {"own_contribution", v.own_contribution},
                     {"others_in_group_sum", v.others_in_group_sum},
                     {"earnings", v.own_round_earnings_total},
                     {"earnings_from_private", v.earnings_from_private},
                     {"earnings_from_group", v.earnings_from_group},
                     {"group_panel", panel_json(v.group_panel)}};
                if (v.session_panel) {
                    auto groups = oj::array();
                    for (const auto& g : *v.session_panel) groups.push_back(panel_json(g));
                    j["session_panel"] = std::move(groups);
                }
                return j;
            },
            [](const SessionComplete& m) {
                return oj{{"type", "SessionComplete"},
                          {"total_tokens", m.total_tokens},
                          {"currency_amount", m.currency_amount}};
            },
            [](const SessionAborted& m) {
                return oj{{"type", "SessionAborted"}, {"completed_rounds", m.completed_rounds}};
            },
        },
        msg);
}

std::string encode(const Outbound& msg) { return to_json(msg).dump(); }

std::string type_name(const Outbound& msg) { return to_json(msg)["type"].get<std::string>(); }

}  // namespace vcm::server
