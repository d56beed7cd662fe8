#include "vcm/game.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "vcm/errors.hpp"

namespace vcm {

std::string to_string(Treatment t) {
    return t == Treatment::GroupFeedback ? "group" : "session";
}

Treatment parse_treatment(const std::string& s) {
    if (s == "group" || s == "GroupFeedback") return Treatment::GroupFeedback;
    if (s == "session" || s == "community" || s == "SessionFeedback")
        return Treatment::SessionFeedback;
    throw DomainError("unknown treatment '" + s + "' (expected group or session)");
}

void SessionConfig::validate() const {
    if (endowment <= 0) throw DomainError("endowment must be positive");
    if (group_size < 2) throw DomainError("group size must be at least 2");
    if (group_count < 1) throw DomainError("group count must be at least 1");
    if (rounds < 1) throw DomainError("rounds must be at least 1");
    if (!(multiplier > 1.0 && multiplier < group_size))
        throw DomainError(fmt::format("multiplier {} outside the social-dilemma range (1, {})",
                                      multiplier, group_size));
    if (!(conversion_rate > 0.0)) throw DomainError("conversion rate must be positive");
}

std::vector<SubjectId> GroupAssignment::members(GroupId g) const {
    std::vector<SubjectId> out;
    for (SubjectId i = 0; i < static_cast<SubjectId>(group_of.size()); ++i)
        if (group_of[i] == g) out.push_back(i);
    return out;
}

void validate_assignment(const SessionConfig& config, const GroupAssignment& assignment) {
    const auto n = static_cast<std::size_t>(config.session_size());
    if (assignment.group_of.size() != n)
        throw StructuralError(fmt::format("assignment covers {} subjects, session has {}",
                                          assignment.group_of.size(), n));
    std::vector<int> sizes(config.group_count, 0);
    for (GroupId g : assignment.group_of) {
        if (g < 0 || g >= config.group_count)
            throw StructuralError(fmt::format("group id {} out of range", g));
        ++sizes[g];
    }
    for (int g = 0; g < config.group_count; ++g)
        if (sizes[g] != config.group_size)
            throw StructuralError(
                fmt::format("group {} has {} members, expected {}", g, sizes[g], config.group_size));
}

GroupAssignment assign_groups(const SessionConfig& config, std::span<const SubjectId> subjects,
                              int round, Rng& rng) {
    const int n = config.session_size();
    if (static_cast<int>(subjects.size()) != n)
        throw StructuralError(
            fmt::format("assign_groups needs {} subjects, got {}", n, subjects.size()));
    std::vector<char> seen(n, 0);
    for (SubjectId s : subjects) {
        if (s < 0 || s >= n || seen[s])
            throw StructuralError(fmt::format("subject id {} invalid or repeated", s));
        seen[s] = 1;
    }
    // Sort first so the draw depends only on the subject set, not its order.
    std::vector<SubjectId> order(subjects.begin(), subjects.end());
    std::sort(order.begin(), order.end());
    std::shuffle(order.begin(), order.end(), rng);

    GroupAssignment out;
    out.round = round;
    out.group_of.assign(n, 0);
    for (int pos = 0; pos < n; ++pos) out.group_of[order[pos]] = pos / config.group_size;
    return out;
}

GroupAssignment assign_groups_for_round(const SessionConfig& config, std::uint64_t seed,
                                        std::uint64_t replication, int round) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(StreamTag::Grouping), replication,
                              static_cast<std::uint64_t>(round)});
    std::vector<SubjectId> ids(config.session_size());
    std::iota(ids.begin(), ids.end(), 0);
    return assign_groups(config, ids, round, rng);
}

namespace {

void check_contributions(const SessionConfig& config, std::span<const Tokens> contributions) {
    if (static_cast<int>(contributions.size()) != config.session_size())
        throw StructuralError(fmt::format("{} contributions for a session of {}",
                                          contributions.size(), config.session_size()));
    for (Tokens x : contributions)
        if (x < 0 || x > config.endowment)
            throw DomainError(
                fmt::format("contribution {} outside [0, {}]", x, config.endowment));
}

std::vector<Tokens> group_sums(const SessionConfig& config, const GroupAssignment& assignment,
                               std::span<const Tokens> contributions) {
    std::vector<Tokens> sums(config.group_count, 0);
    for (std::size_t i = 0; i < contributions.size(); ++i)
        sums[assignment.group_of[i]] += contributions[i];
    return sums;
}

std::vector<PanelEntry> panel_for(const GroupAssignment& assignment,
                                  std::span<const Tokens> contributions, GroupId g,
                                  SubjectId viewer) {
    std::vector<PanelEntry> own;
    std::vector<PanelEntry> rest;
    for (SubjectId i = 0; i < static_cast<SubjectId>(contributions.size()); ++i) {
        if (assignment.group_of[i] != g) continue;
        if (i == viewer)
            own.push_back({contributions[i], true});
        else
            rest.push_back({contributions[i], false});
    }
    std::sort(rest.begin(), rest.end(),
              [](const PanelEntry& a, const PanelEntry& b) { return a.contribution > b.contribution; });
    own.insert(own.end(), rest.begin(), rest.end());
    return own;
}

}  // namespace

std::vector<double> compute_round_payoffs(const SessionConfig& config,
                                          const GroupAssignment& assignment,
                                          std::span<const Tokens> contributions) {
    validate_assignment(config, assignment);
    check_contributions(config, contributions);
    const auto sums = group_sums(config, assignment, contributions);
    const double share = config.multiplier / config.group_size;
    std::vector<double> earnings(contributions.size());
    for (std::size_t i = 0; i < contributions.size(); ++i)
        earnings[i] = static_cast<double>(config.endowment - contributions[i]) +
                      static_cast<double>(sums[assignment.group_of[i]]) * share;
    return earnings;
}

FeedbackView build_feedback(const SessionConfig& config, const GroupAssignment& assignment,
                            std::span<const Tokens> contributions,
                            std::span<const double> earnings, SubjectId subject) {
    validate_assignment(config, assignment);
    check_contributions(config, contributions);
    if (subject < 0 || subject >= config.session_size())
        throw LookupError(fmt::format("unknown subject id {}", subject));
    if (earnings.size() != contributions.size())
        throw StructuralError("earnings and contributions differ in length");

    const auto sums = group_sums(config, assignment, contributions);
    const GroupId own_group = assignment.group_of[subject];

    FeedbackView view;
    view.subject_id = subject;
    view.round = assignment.round;
    view.own_contribution = contributions[subject];
    view.others_in_group_sum = sums[own_group] - contributions[subject];
    view.own_round_earnings_total = earnings[subject];
    view.earnings_from_private = static_cast<double>(config.endowment - contributions[subject]);
    view.earnings_from_group = view.own_round_earnings_total - view.earnings_from_private;
    view.group_panel = panel_for(assignment, contributions, own_group, subject);
    if (config.treatment == Treatment::SessionFeedback) {
        std::vector<std::vector<PanelEntry>> clusters;
        clusters.push_back(view.group_panel);
        for (GroupId g = 0; g < config.group_count; ++g)
            if (g != own_group) clusters.push_back(panel_for(assignment, contributions, g, subject));
        view.session_panel = std::move(clusters);
    }
    return view;
}

std::string Money::to_string() const {
    const char* sign = cents < 0 ? "-" : "";
    const std::int64_t a = cents < 0 ? -cents : cents;
    return fmt::format("{}{}.{:02d}", sign, a / 100, a % 100);
}

Money convert_tokens(double total_tokens, double conversion_rate) {
    if (!(total_tokens >= 0.0)) throw DomainError("token total must be nonnegative");
    if (!(conversion_rate > 0.0)) throw DomainError("conversion rate must be positive");
    // The relative nudge absorbs representation error in rates such as 0.0018
    // so that exact half-cent products round up.
    const double hundredths = total_tokens * conversion_rate * 100.0;
    return Money{static_cast<std::int64_t>(std::floor(hundredths * (1.0 + 1e-12) + 0.5))};
}

}  // namespace vcm
