#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vcm/rng.hpp"

namespace vcm {

using Tokens = std::int64_t;
using SubjectId = int;
using GroupId = int;

enum class Treatment { GroupFeedback, SessionFeedback };

std::string to_string(Treatment t);
Treatment parse_treatment(const std::string& s);

struct SessionConfig {
    Tokens endowment = 100;
    double multiplier = 2.0;
    int group_size = 4;
    int group_count = 3;
    int rounds = 80;
    Treatment treatment = Treatment::GroupFeedback;
    double conversion_rate = 0.0018;
    std::uint64_t seed = 0;

    int session_size() const noexcept { return group_size * group_count; }
    double mpcr() const noexcept { return multiplier / group_size; }

    // Throws DomainError unless 1 < g < n, e > 0, T >= 1, G >= 1, rate > 0.
    void validate() const;

    bool operator==(const SessionConfig&) const = default;
};

// Unlabeled partition of subjects 0..N-1 into group_count groups.
struct GroupAssignment {
    int round = 0;
    std::vector<GroupId> group_of;

    std::vector<SubjectId> members(GroupId g) const;
    bool operator==(const GroupAssignment&) const = default;
};

// Throws StructuralError if the partition does not cover 0..N-1 with
// group_count groups of exactly group_size members.
void validate_assignment(const SessionConfig& config, const GroupAssignment& assignment);

// Uniformly random partition of `subjects` (which must be exactly 0..N-1 in
// any order) drawn from `rng`.
GroupAssignment assign_groups(const SessionConfig& config, std::span<const SubjectId> subjects,
                              int round, Rng& rng);

// Partition for `round` drawn from the counter stream (seed, replication,
// round). Live sessions and simulations both use this, so a partition never
// depends on anything but those three numbers.
GroupAssignment assign_groups_for_round(const SessionConfig& config, std::uint64_t seed,
                                        std::uint64_t replication, int round);

// Per-subject earnings (e - x_i) + S_group * g / n. Earnings are real-valued
// tokens: with g=2, n=4 they are multiples of 0.5 and exact in double.
std::vector<double> compute_round_payoffs(const SessionConfig& config,
                                          const GroupAssignment& assignment,
                                          std::span<const Tokens> contributions);

struct PanelEntry {
    Tokens contribution = 0;
    bool own = false;
    bool operator==(const PanelEntry&) const = default;
};

// What one subject sees after a round. Panels carry contributions only; the
// own entry comes first and the rest are sorted high to low so no position
// is a stable label for another participant.
struct FeedbackView {
    SubjectId subject_id = 0;
    int round = 0;
    Tokens own_contribution = 0;
    Tokens others_in_group_sum = 0;
    double own_round_earnings_total = 0;
    double earnings_from_private = 0;
    double earnings_from_group = 0;
    std::vector<PanelEntry> group_panel;
    // Own group first, then the other groups; present iff SessionFeedback.
    std::optional<std::vector<std::vector<PanelEntry>>> session_panel;

    bool operator==(const FeedbackView&) const = default;
};

FeedbackView build_feedback(const SessionConfig& config, const GroupAssignment& assignment,
                            std::span<const Tokens> contributions,
                            std::span<const double> earnings, SubjectId subject);

// Currency in hundredths, rounded half-up once at payout.
struct Money {
    std::int64_t cents = 0;
    double value() const noexcept { return static_cast<double>(cents) / 100.0; }
    std::string to_string() const;
    bool operator==(const Money&) const = default;
};

Money convert_tokens(double total_tokens, double conversion_rate);

}  // namespace vcm
