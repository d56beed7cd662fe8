#pragma once

#include <string>
#include <vector>

#include "vcm/agents.hpp"
#include "vcm/run_config.hpp"
#include "vcm/session_log.hpp"

namespace vcm {

// HistoryView for `subject` deciding in `round`, built from rounds
// 1..round-1 of `table`. Only information the treatment reveals is used:
// the own group's lagged mean always, session-wide counts only under
// SessionFeedback.
HistoryView history_view(const SessionConfig& config, const RoundTable& table, SubjectId subject,
                         int round);

// Every round: agents decide, groups are drawn, payoffs computed, records
// appended. Deterministic in (spec, replication).
SessionLog run_session(const RunSpec& spec, std::uint64_t replication);

struct BatchResult {
    std::vector<SessionLog> logs;        // indexed by replication
    std::vector<double> mean_per_round;  // across all subjects of all replications
};

// Replications in parallel (OpenMP). Output is identical to run_batch_serial.
BatchResult run_batch(const RunSpec& spec);
BatchResult run_batch_serial(const RunSpec& spec);

// Writes <dir>/<session_id>.jsonl per log plus <dir>/summary.csv.
void write_batch(const BatchResult& batch, const std::string& dir);

}  // namespace vcm
