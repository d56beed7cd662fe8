#include "vcm/session_log.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <glob.h>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "vcm/errors.hpp"

namespace vcm {

using nlohmann::json;
using nlohmann::ordered_json;

int SessionLog::completed_rounds() const {
    return records.empty() ? 0 : records.back().round;
}

RoundTable tabulate(const SessionLog& log) {
    RoundTable t;
    t.subjects = log.header.config.session_size();
    t.rounds = log.completed_rounds();
    t.contribution.assign(static_cast<std::size_t>(t.rounds) * t.subjects, 0);
    t.group.assign(t.contribution.size(), 0);
    for (const auto& r : log.records) {
        const std::size_t k = static_cast<std::size_t>(r.round - 1) * t.subjects + r.subject_id;
        t.contribution[k] = r.contribution;
        t.group[k] = r.group_id;
    }
    return t;
}

void validate_log(const SessionLog& log) {
    const auto& cfg = log.header.config;
    cfg.validate();
    const int n = cfg.session_size();
    if (log.records.size() % n != 0)
        throw StructuralError(fmt::format("{}: {} records is not a whole number of rounds",
                                          log.header.session_id, log.records.size()));
    const int rounds = static_cast<int>(log.records.size()) / n;
    if (rounds > cfg.rounds)
        throw StructuralError(fmt::format("{}: {} rounds recorded, config allows {}",
                                          log.header.session_id, rounds, cfg.rounds));
    if (log.header.complete && rounds != cfg.rounds)
        throw StructuralError(fmt::format("{}: complete log holds {} of {} rounds",
                                          log.header.session_id, rounds, cfg.rounds));

    std::vector<Tokens> x(n);
    std::vector<double> earned(n);
    for (int t = 1; t <= rounds; ++t) {
        GroupAssignment a;
        a.round = t;
        a.group_of.assign(n, 0);
        for (int s = 0; s < n; ++s) {
            const auto& r = log.records[static_cast<std::size_t>(t - 1) * n + s];
            if (r.round != t || r.subject_id != s)
                throw StructuralError(fmt::format(
                    "{}: record order broken at round {} subject {} (found round {} subject {})",
                    log.header.session_id, t, s, r.round, r.subject_id));
            if (r.session_id != log.header.session_id)
                throw StructuralError(fmt::format("record session id '{}' differs from header '{}'",
                                                  r.session_id, log.header.session_id));
            a.group_of[s] = r.group_id;
            x[s] = r.contribution;
            earned[s] = r.earnings;
        }
        try {
            const auto expected = compute_round_payoffs(cfg, a, x);
            for (int s = 0; s < n; ++s)
                if (expected[s] != earned[s])
                    throw StructuralError(fmt::format(
                        "{}: round {} subject {} earnings {} but payoff rule gives {}",
                        log.header.session_id, t, s, earned[s], expected[s]));
        } catch (const DomainError& e) {
            throw StructuralError(fmt::format("{}: round {}: {}", log.header.session_id, t, e.what()));
        } catch (const StructuralError& e) {
            throw StructuralError(fmt::format("{}: round {}: {}", log.header.session_id, t, e.what()));
        }
    }
}

ordered_json config_to_json(const SessionConfig& c) {
    ordered_json j;
    j["endowment"] = c.endowment;
    j["multiplier"] = c.multiplier;
    j["group_size"] = c.group_size;
    j["group_count"] = c.group_count;
    j["rounds"] = c.rounds;
    j["treatment"] = to_string(c.treatment);
    j["conversion_rate"] = c.conversion_rate;
    j["seed"] = c.seed;
    return j;
}

SessionConfig config_from_json(const json& j) {
    SessionConfig c;
    c.endowment = j.value("endowment", c.endowment);
    c.multiplier = j.value("multiplier", c.multiplier);
    c.group_size = j.value("group_size", c.group_size);
    c.group_count = j.value("group_count", c.group_count);
    c.rounds = j.value("rounds", c.rounds);
    if (j.contains("treatment")) c.treatment = parse_treatment(j.at("treatment").get<std::string>());
    c.conversion_rate = j.value("conversion_rate", c.conversion_rate);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace {

std::string record_line(const ContributionRecord& r) {
    return fmt::format(R"({{"session_id":{},"round":{},"subject_id":{},"group_id":{},"contribution":{},"earnings":{}}})",
                       json(r.session_id).dump(), r.round, r.subject_id, r.group_id,
                       r.contribution, r.earnings);
}

}  // namespace

void write_jsonl(const SessionLog& log, std::ostream& out) {
    const auto& h = log.header;
    ordered_json j;
    j["type"] = "header";
    j["schema"] = h.schema;
    j["session_id"] = h.session_id;
    j["config"] = config_to_json(h.config);
    j["roster"] = h.roster;
    j["seed"] = h.seed;
    j["replication"] = h.replication;
    j["started_at"] = h.started_at;
    j["finished_at"] = h.finished_at;
    j["complete"] = h.complete;
    out << j.dump() << '\n';
    for (const auto& r : log.records) out << record_line(r) << '\n';
}

SessionLog read_jsonl(std::istream& in) {
    SessionLog log;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw StructuralError(fmt::format("line {}: {}", lineno, e.what()));
        }
        try {
            if (!have_header) {
                if (j.value("type", "") != "header")
                    throw StructuralError("first line is not a log header");
                auto& h = log.header;
                h.schema = j.at("schema").get<int>();
                if (h.schema != kLogSchemaVersion)
                    throw StructuralError(fmt::format("unsupported log schema {}", h.schema));
                h.session_id = j.at("session_id").get<std::string>();
                h.config = config_from_json(j.at("config"));
                h.roster = j.value("roster", json("live"));
                h.seed = j.value("seed", std::uint64_t{0});
                h.replication = j.value("replication", std::uint64_t{0});
                h.started_at = j.value("started_at", "");
                h.finished_at = j.value("finished_at", "");
                h.complete = j.value("complete", true);
                have_header = true;
                continue;
            }
            ContributionRecord r;
            r.session_id = j.at("session_id").get<std::string>();
            r.round = j.at("round").get<int>();
            r.subject_id = j.at("subject_id").get<int>();
            r.group_id = j.at("group_id").get<int>();
            r.contribution = j.at("contribution").get<Tokens>();
            r.earnings = j.at("earnings").get<double>();
            log.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw StructuralError(fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    if (!have_header) throw StructuralError("empty log");
    return log;
}

void write_csv(const SessionLog& log, std::ostream& out) {
    out << kCsvColumns << '\n';
    for (const auto& r : log.records)
        out << fmt::format("{},{},{},{},{},{}\n", r.session_id, r.round, r.subject_id, r.group_id,
                           r.contribution, r.earnings);
}

SessionLog read_csv(std::istream& in, const SessionConfig& base) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvColumns)
        throw StructuralError(fmt::format("CSV header must be '{}'", kCsvColumns));
    SessionLog log;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw StructuralError(fmt::format("CSV line {}: expected 6 fields", lineno));
        try {
            ContributionRecord r;
            r.session_id = f[0];
            r.round = std::stoi(f[1]);
            r.subject_id = std::stoi(f[2]);
            r.group_id = std::stoi(f[3]);
            r.contribution = std::stoll(f[4]);
            r.earnings = std::stod(f[5]);
            log.records.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw StructuralError(fmt::format("CSV line {}: unparsable number", lineno));
        }
    }
    if (log.records.empty()) throw StructuralError("CSV log has no records");

    auto& h = log.header;
    h.session_id = log.records.front().session_id;
    h.config = base;
    int max_round = 0;
    int max_subject = 0;
    int max_group = 0;
    for (const auto& r : log.records) {
        max_round = std::max(max_round, r.round);
        max_subject = std::max(max_subject, r.subject_id);
        max_group = std::max(max_group, r.group_id);
    }
    const int n = max_subject + 1;
    h.config.group_count = max_group + 1;
    if (n % h.config.group_count != 0)
        throw StructuralError(fmt::format("CSV: {} subjects do not split into {} groups", n,
                                          h.config.group_count));
    h.config.group_size = n / h.config.group_count;
    h.config.rounds = max_round;
    h.complete = true;
    return log;
}

void save_log(const SessionLog& log, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
            write_csv(log, out);
        else
            write_jsonl(log, out);
        out.flush();
        if (!out) throw IoError(path, "write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError(path, "rename failed");
}

SessionLog load_log(const std::string& path, const SessionConfig& csv_base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    try {
        if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
            return read_csv(in, csv_base);
        return read_jsonl(in);
    } catch (const StructuralError& e) {
        throw StructuralError(path + ": " + e.what());
    }
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace vcm
