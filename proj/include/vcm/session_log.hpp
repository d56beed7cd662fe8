#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcm/game.hpp"

namespace vcm {

inline constexpr int kLogSchemaVersion = 1;

struct ContributionRecord {
    std::string session_id;
    int round = 0;  // 1-based
    SubjectId subject_id = 0;
    GroupId group_id = 0;
    Tokens contribution = 0;
    double earnings = 0;
    bool operator==(const ContributionRecord&) const = default;
};

struct LogHeader {
    int schema = kLogSchemaVersion;
    std::string session_id;
    SessionConfig config;
    nlohmann::json roster = "live";  // agent descriptors, or "live"
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::string started_at;  // empty for simulated logs
    std::string finished_at;
    bool complete = true;
    bool operator==(const LogHeader&) const = default;
};

struct SessionLog {
    LogHeader header;
    std::vector<ContributionRecord> records;  // sorted by (round, subject_id)

    int completed_rounds() const;
    bool operator==(const SessionLog&) const = default;
};

// Dense per-round view of a log: contribution and group of every subject.
struct RoundTable {
    int rounds = 0;
    int subjects = 0;
    std::vector<Tokens> contribution;  // [(round-1) * subjects + subject]
    std::vector<GroupId> group;

    Tokens x(int round, SubjectId s) const { return contribution[(round - 1) * subjects + s]; }
    GroupId g(int round, SubjectId s) const { return group[(round - 1) * subjects + s]; }
};

// Requires a log that passes validate_log.
RoundTable tabulate(const SessionLog& log);

// Throws StructuralError on the first violation: record count and order,
// partition validity per round, contribution range, and exact agreement of
// every earnings value with the payoff rule.
void validate_log(const SessionLog& log);

nlohmann::ordered_json config_to_json(const SessionConfig& c);
SessionConfig config_from_json(const nlohmann::json& j);

void write_jsonl(const SessionLog& log, std::ostream& out);
SessionLog read_jsonl(std::istream& in);

inline constexpr const char* kCsvColumns = "session_id,round,subject_id,group_id,contribution,earnings";

void write_csv(const SessionLog& log, std::ostream& out);
// CSV carries no header metadata: group size, group count and rounds are
// inferred from the rows; endowment, multiplier and treatment come from `base`.
SessionLog read_csv(std::istream& in, const SessionConfig& base);

void save_log(const SessionLog& log, const std::string& path);
// Dispatches on extension: ".csv" goes through read_csv with `csv_base`.
SessionLog load_log(const std::string& path, const SessionConfig& csv_base = {});

// Paths matching a shell glob, sorted. Empty result is not an error here.
std::vector<std::string> expand_glob(const std::string& pattern);

}  // namespace vcm
