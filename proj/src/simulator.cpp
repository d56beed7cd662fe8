#include "vcm/simulator.hpp"

#include <filesystem>
#include <fmt/format.h>
#include <fstream>

#include "vcm/errors.hpp"

namespace vcm {

HistoryView history_view(const SessionConfig& config, const RoundTable& table, SubjectId subject,
                         int round) {
    HistoryView v;
    v.round = round;
    if (round < 2) return v;
    const int prev = round - 1;
    v.own_first = table.x(1, subject);
    v.own_lag1 = table.x(prev, subject);
    if (round >= 3) v.own_lag2 = table.x(round - 2, subject);

    const GroupId g = table.g(prev, subject);
    Tokens others = 0;
    int zeros = 0;
    int fulls = 0;
    for (SubjectId s = 0; s < table.subjects; ++s) {
        if (s == subject) continue;
        const Tokens x = table.x(prev, s);
        if (table.g(prev, s) == g) others += x;
        zeros += x == 0;
        fulls += x == config.endowment;
    }
    v.mean_others_lag1 = static_cast<double>(others) / (config.group_size - 1);
    if (config.treatment == Treatment::SessionFeedback) {
        v.zero_count_lag1 = zeros;
        v.full_count_lag1 = fulls;
    }
    return v;
}

SessionLog run_session(const RunSpec& spec, std::uint64_t replication) {
    spec.validate();
    const auto& cfg = spec.config;
    const int n = cfg.session_size();

    std::vector<Rng> streams;
    streams.reserve(n);
    for (int s = 0; s < n; ++s)
        streams.push_back(make_rng(spec.seed, {static_cast<std::uint64_t>(StreamTag::Agent),
                                               replication, static_cast<std::uint64_t>(s)}));

    SessionLog log;
    log.header.session_id = fmt::format("{}-r{:03d}", spec.session_prefix, replication);
    log.header.config = cfg;
    log.header.config.seed = spec.seed;
    log.header.roster = roster_to_json(spec.roster);
    log.header.seed = spec.seed;
    log.header.replication = replication;
    log.records.reserve(static_cast<std::size_t>(cfg.rounds) * n);

    RoundTable table;
    table.subjects = n;
    std::vector<Tokens> x(n);
    for (int t = 1; t <= cfg.rounds; ++t) {
        for (int s = 0; s < n; ++s)
            x[s] = agent_decide(spec.roster[s], history_view(cfg, table, s, t), cfg.endowment,
                                streams[s]);
        const auto assignment = assign_groups_for_round(cfg, spec.seed, replication, t);
        const auto earnings = compute_round_payoffs(cfg, assignment, x);
        for (int s = 0; s < n; ++s) {
            log.records.push_back({log.header.session_id, t, s, assignment.group_of[s], x[s],
                                   earnings[s]});
            table.contribution.push_back(x[s]);
            table.group.push_back(assignment.group_of[s]);
        }
        table.rounds = t;
    }
    return log;
}

namespace {

std::vector<double> batch_means(const RunSpec& spec, const std::vector<SessionLog>& logs) {
    const int n = spec.config.session_size();
    std::vector<double> means(spec.config.rounds, 0.0);
    for (int t = 1; t <= spec.config.rounds; ++t) {
        Tokens sum = 0;
        for (const auto& log : logs)
            for (int s = 0; s < n; ++s)
                sum += log.records[static_cast<std::size_t>(t - 1) * n + s].contribution;
        means[t - 1] = static_cast<double>(sum) / (static_cast<double>(n) * logs.size());
    }
    return means;
}

}  // namespace

BatchResult run_batch_serial(const RunSpec& spec) {
    spec.validate();
    BatchResult out;
    out.logs.resize(spec.replications);
    for (int r = 0; r < spec.replications; ++r) out.logs[r] = run_session(spec, r);
    out.mean_per_round = batch_means(spec, out.logs);
    return out;
}

BatchResult run_batch(const RunSpec& spec) {
    spec.validate();
    BatchResult out;
    out.logs.resize(spec.replications);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < spec.replications; ++r) out.logs[r] = run_session(spec, r);
    out.mean_per_round = batch_means(spec, out.logs);
    return out;
}

void write_batch(const BatchResult& batch, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir, ec.message());
    for (const auto& log : batch.logs)
        save_log(log, (std::filesystem::path(dir) / (log.header.session_id + ".jsonl")).string());
    const auto path = (std::filesystem::path(dir) / "summary.csv").string();
    std::ofstream out(path);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "round,mean_contribution\n";
    for (std::size_t t = 0; t < batch.mean_per_round.size(); ++t)
        out << fmt::format("{},{}\n", t + 1, batch.mean_per_round[t]);
    if (!out) throw IoError(path, "write failed");
}

}  // namespace vcm
