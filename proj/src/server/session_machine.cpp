#include "vcm/server/session_machine.hpp"

#include <algorithm>
#include <set>

#include "vcm/errors.hpp"

namespace vcm::server {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void to_all(Transition& tr, const Outbound& msg) {
    for (SubjectId s = 0; s < tr.state.config.session_size(); ++s) tr.outbound.push_back({s, msg});
}

void reply(Transition& tr, Outbound msg) { tr.outbound.push_back({std::nullopt, std::move(msg)}); }

void open_round(Transition& tr, int round) {
    auto& st = tr.state;
    st.phase = Phase::RoundOpen;
    st.round = round;
    std::fill(st.submissions.begin(), st.submissions.end(), std::nullopt);
    std::fill(st.acks.begin(), st.acks.end(), false);
    to_all(tr, EndowmentNotice{round, st.config.endowment});
}

void close_round(Transition& tr) {
    auto& st = tr.state;
    const int n = st.config.session_size();
    std::vector<Tokens> x(n);
    for (SubjectId s = 0; s < n; ++s) x[s] = *st.submissions[s];
    // Groups are formed only once every contribution is in.
    const auto assignment = assign_groups_for_round(st.config, st.config.seed, 0, st.round);
    const auto pay = compute_round_payoffs(st.config, assignment, x);
    for (SubjectId s = 0; s < n; ++s)
        st.log.records.push_back({st.session_id, st.round, s, assignment.group_of[s], x[s], pay[s]});
    st.phase = Phase::FeedbackPending;
    std::fill(st.acks.begin(), st.acks.end(), false);
    for (SubjectId s = 0; s < n; ++s)
        tr.outbound.push_back({s, RoundFeedback{build_feedback(st.config, assignment, x, pay, s)}});
}

SessionComplete completion(const SessionState& st, SubjectId s) {
    const double total = total_earnings(st, s);
    return {total, convert_tokens(total, st.config.conversion_rate).to_string()};
}

void on_join(Transition& tr, const Sender& sender, const Join& m) {
    auto& st = tr.state;
    if (m.schema != kProtocolSchema) return reply(tr, RejectJoin{reason::schema_mismatch});
    const auto subject = st.subject_for(m.token);
    if (!subject) return reply(tr, RejectJoin{reason::unknown_token});
    if (sender.subject && *sender.subject != *subject) return reply(tr, RejectJoin{reason::duplicate});
    tr.bind = subject;
    const bool first = !st.joined[*subject];
    if (first) {
        st.joined[*subject] = true;
        tr.changed = true;
    }
    reply(tr, JoinAccepted{kProtocolSchema, st.config.treatment, st.config.endowment, st.config.multiplier,
                           st.config.group_size, st.config.session_size(), st.config.rounds,
                           st.joined_count()});
    if (st.phase == Phase::Lobby) {
        if (first && st.joined_count() == st.config.session_size()) open_round(tr, 1);
        return;
    }
    for (auto& msg : current_messages(st, *subject)) reply(tr, std::move(msg));
}

void on_submit(Transition& tr, const Sender& sender, const SubmitAllocation& m) {
    auto& st = tr.state;
    if (!sender.subject) return reply(tr, RejectMessage{reason::not_joined, "SubmitAllocation"});
    const SubjectId s = *sender.subject;
    if (st.phase != Phase::RoundOpen) return reply(tr, RejectSubmission{reason::out_of_phase, st.round});
    if (m.private_tokens < 0 || m.group_tokens < 0)
        return reply(tr, RejectSubmission{reason::negative, st.round});
    if (m.private_tokens + m.group_tokens != st.config.endowment)
        return reply(tr, RejectSubmission{reason::sum_mismatch, st.round});
    if (st.submissions[s]) return reply(tr, RejectSubmission{reason::duplicate, st.round});
    st.submissions[s] = m.group_tokens;
    tr.changed = true;
    reply(tr, SubmissionAccepted{st.round});
    if (st.submitted_count() == st.config.session_size()) close_round(tr);
}

void on_ack(Transition& tr, const Sender& sender) {
    auto& st = tr.state;
    if (!sender.subject) return reply(tr, RejectMessage{reason::not_joined, "AckFeedback"});
    const SubjectId s = *sender.subject;
    if (st.phase != Phase::FeedbackPending) return reply(tr, RejectMessage{reason::out_of_phase, "AckFeedback"});
    if (st.acks[s]) return reply(tr, RejectMessage{reason::duplicate, "AckFeedback"});
    st.acks[s] = true;
    tr.changed = true;
    if (st.acked_count() < st.config.session_size()) return;
    if (st.round < st.config.rounds) return open_round(tr, st.round + 1);
    st.phase = Phase::Finished;
    st.log.header.complete = true;
    for (SubjectId i = 0; i < st.config.session_size(); ++i) tr.outbound.push_back({i, completion(st, i)});
}

}  // namespace

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Lobby: return "Lobby";
        case Phase::RoundOpen: return "RoundOpen";
        case Phase::FeedbackPending: return "FeedbackPending";
        case Phase::Finished: return "Finished";
        case Phase::Aborted: return "Aborted";
    }
    return "?";
}

Phase parse_phase(const std::string& s) {
    for (Phase p : {Phase::Lobby, Phase::RoundOpen, Phase::FeedbackPending, Phase::Finished, Phase::Aborted})
        if (to_string(p) == s) return p;
    throw StructuralError("unknown phase: " + s);
}

int SessionState::joined_count() const { return static_cast<int>(std::count(joined.begin(), joined.end(), true)); }

int SessionState::submitted_count() const {
    return static_cast<int>(std::count_if(submissions.begin(), submissions.end(),
                                          [](const auto& x) { return x.has_value(); }));
}

int SessionState::acked_count() const { return static_cast<int>(std::count(acks.begin(), acks.end(), true)); }

std::optional<SubjectId> SessionState::subject_for(const std::string& token) const {
    const auto it = std::find(tokens.begin(), tokens.end(), token);
    if (token.empty() || it == tokens.end()) return std::nullopt;
    return static_cast<SubjectId>(it - tokens.begin());
}

SessionState new_session(std::string session_id, const SessionConfig& config, std::vector<std::string> tokens,
                         std::string started_at) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.session_size());
    if (tokens.size() != n) throw StructuralError("need exactly one join token per subject");
    if (std::set<std::string>(tokens.begin(), tokens.end()).size() != n ||
        std::any_of(tokens.begin(), tokens.end(), [](const auto& t) { return t.empty(); }))
        throw StructuralError("join tokens must be distinct and nonempty");
    SessionState st;
    st.session_id = std::move(session_id);
    st.config = config;
    st.tokens = std::move(tokens);
    st.joined.assign(n, false);
    st.submissions.assign(n, std::nullopt);
    st.acks.assign(n, false);
    st.log.header.session_id = st.session_id;
    st.log.header.config = config;
    st.log.header.seed = config.seed;
    st.log.header.started_at = std::move(started_at);
    st.log.header.complete = false;
    return st;
}

Transition handle_message(SessionState state, Sender sender, const Inbound& msg) {
    Transition tr{std::move(state), {}, std::nullopt, false};
    if (tr.state.phase == Phase::Aborted && !std::holds_alternative<Join>(msg)) {
        reply(tr, RejectMessage{reason::out_of_phase, ""});
        return tr;
    }
    std::visit(overloaded{
                   [&](const Join& m) { on_join(tr, sender, m); },
                   [&](const SubmitAllocation& m) { on_submit(tr, sender, m); },
                   [&](const AckFeedback&) { on_ack(tr, sender); },
                   [&](const Malformed& m) {
                       if (m.type == "SubmitAllocation")
                           reply(tr, RejectSubmission{m.reason, tr.state.round});
                       else
                           reply(tr, RejectMessage{m.reason, m.type});
                   },
               },
               msg);
    return tr;
}

Transition abort_session(SessionState state) {
    Transition tr{std::move(state), {}, std::nullopt, false};
    auto& st = tr.state;
    if (st.phase == Phase::Finished || st.phase == Phase::Aborted) return tr;
    st.phase = Phase::Aborted;
    st.log.header.complete = false;
    tr.changed = true;
    to_all(tr, SessionAborted{st.log.completed_rounds()});
    return tr;
}

FeedbackView feedback_from_log(const SessionState& st, int round, SubjectId subject) {
    const int n = st.config.session_size();
    const auto first = static_cast<std::size_t>(round - 1) * n;
    if (round < 1 || first + n > st.log.records.size()) throw LookupError("round not in log");
    GroupAssignment a{round, std::vector<GroupId>(n)};
    std::vector<Tokens> x(n);
    std::vector<double> pay(n);
    for (SubjectId s = 0; s < n; ++s) {
        const auto& r = st.log.records[first + s];
        a.group_of[s] = r.group_id;
        x[s] = r.contribution;
        pay[s] = r.earnings;
    }
    return build_feedback(st.config, a, x, pay, subject);
}

double total_earnings(const SessionState& st, SubjectId subject) {
    double total = 0;
    for (const auto& r : st.log.records)
        if (r.subject_id == subject) total += r.earnings;
    return total;
}

std::vector<Outbound> current_messages(const SessionState& st, SubjectId subject) {
    switch (st.phase) {
        case Phase::Lobby: return {};
        case Phase::RoundOpen: {
            std::vector<Outbound> out{EndowmentNotice{st.round, st.config.endowment}};
            if (st.submissions[subject]) out.emplace_back(SubmissionAccepted{st.round});
            return out;
        }
        case Phase::FeedbackPending:
            if (st.acks[subject]) return {};
            return {RoundFeedback{feedback_from_log(st, st.round, subject)}};
        case Phase::Finished: return {completion(st, subject)};
        case Phase::Aborted: return {SessionAborted{st.log.completed_rounds()}};
    }
    return {};
}

}  // namespace vcm::server
