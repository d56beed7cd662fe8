#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vcm/errors.hpp"
#include "vcm/simulator.hpp"

using namespace vcm;

namespace {

RunSpec uniform_roster(AgentKind kind, int rounds = 80, Treatment t = Treatment::GroupFeedback) {
    RunSpec spec;
    spec.config.rounds = rounds;
    spec.config.treatment = t;
    spec.seed = 12345;
    AgentSpec a;
    a.kind = kind;
    spec.roster.assign(12, a);
    return spec;
}

RunSpec mixed_roster(Treatment t) {
    RunSpec spec;
    spec.config.treatment = t;
    spec.seed = 777;
    spec.replications = 3;
    AgentSpec fr;
    fr.kind = AgentKind::FreeRider;
    AgentSpec tl;
    tl.kind = AgentKind::TobitLatent;
    tl.coefficients = coefficient_preset(t == Treatment::SessionFeedback ? "us_session" : "us_group");
    tl.noise_sigma = 20;
    AgentSpec cc;
    cc.kind = AgentKind::ConditionalCooperator;
    spec.roster = {fr, fr, fr, tl, tl, tl, tl, tl, tl, cc, cc, cc};
    return spec;
}

}  // namespace

TEST_CASE("all free riders earn the equilibrium payoff") {
    const auto log = run_session(uniform_roster(AgentKind::FreeRider), 0);
    CHECK(log.records.size() == 80 * 12);
    CHECK_NOTHROW(validate_log(log));
    std::vector<double> totals(12, 0);
    for (const auto& r : log.records) {
        CHECK(r.contribution == 0);
        CHECK(r.earnings == 100.0);
        totals[r.subject_id] += r.earnings;
    }
    for (double t : totals) CHECK(t == 8000.0);
}

TEST_CASE("all full cooperators") {
    const auto log = run_session(uniform_roster(AgentKind::FullCooperator), 0);
    std::vector<double> totals(12, 0);
    for (const auto& r : log.records) {
        CHECK(r.earnings == 200.0);
        totals[r.subject_id] += r.earnings;
    }
    for (double t : totals) CHECK(t == 16000.0);
}

TEST_CASE("sessions are deterministic and seed-isolated") {
    auto spec = mixed_roster(Treatment::SessionFeedback);
    const auto a = run_session(spec, 1);
    const auto b = run_session(spec, 1);
    CHECK(a == b);
    std::ostringstream sa, sb;
    write_jsonl(a, sa);
    write_jsonl(b, sb);
    CHECK(sa.str() == sb.str());

    spec.seed = 778;
    const auto c = run_session(spec, 1);
    CHECK(c.records.size() == a.records.size());
    CHECK_FALSE(c.records == a.records);
    CHECK_NOTHROW(validate_log(c));
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(c.records[i].round == a.records[i].round);
        CHECK(c.records[i].subject_id == a.records[i].subject_id);
    }
}

TEST_CASE("parallel batch equals serial reference") {
    auto spec = mixed_roster(Treatment::GroupFeedback);
    spec.replications = 5;
    const auto par = run_batch(spec);
    const auto ser = run_batch_serial(spec);
    CHECK(par.logs == ser.logs);
    CHECK(par.mean_per_round == ser.mean_per_round);
    // Replications are independent of batch size.
    spec.replications = 2;
    CHECK(run_batch(spec).logs[1] == par.logs[1]);
    for (const auto& log : par.logs) CHECK_NOTHROW(validate_log(log));
}

TEST_CASE("batch summary means") {
    auto spec = uniform_roster(AgentKind::FreeRider);
    spec.replications = 2;
    const auto fr = run_batch(spec);
    CHECK(std::all_of(fr.mean_per_round.begin(), fr.mean_per_round.end(),
                      [](double m) { return m == 0.0; }));

    auto mixed = mixed_roster(Treatment::GroupFeedback);
    mixed.replications = 1;
    const auto one = run_batch(mixed);
    const auto& log = one.logs[0];
    for (int t = 1; t <= 80; ++t) {
        long sum = 0;
        for (int s = 0; s < 12; ++s) sum += log.records[(t - 1) * 12 + s].contribution;
        CHECK(one.mean_per_round[t - 1] == static_cast<double>(sum) / 12.0);
    }

    // Conditional cooperators all starting at 50 stay at 50.
    auto cc = uniform_roster(AgentKind::ConditionalCooperator);
    for (auto& a : cc.roster) a.initial_draw = {DrawFamily::Constant, 50, 0};
    cc.replications = 3;
    for (double m : run_batch(cc).mean_per_round) CHECK(m == 50.0);
}

TEST_CASE("conditional cooperator matches a uniform lagged group") {
    SessionConfig cfg;
    RoundTable table;
    table.subjects = 12;
    table.rounds = 1;
    table.group = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    table.contribution = {5, 30, 30, 30, 0, 0, 0, 0, 99, 99, 99, 99};
    const auto v = history_view(cfg, table, 0, 2);
    AgentSpec cc;
    cc.kind = AgentKind::ConditionalCooperator;
    Rng rng(0);
    CHECK(agent_decide(cc, v, 100, rng) == 30);
}

TEST_CASE("history views respect the treatment") {
    SessionConfig cfg;
    RoundTable table;
    table.subjects = 12;
    table.rounds = 2;
    table.group = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1, 0, 0, 0, 0};
    table.contribution = {10, 20, 30, 40, 0, 0, 100, 100, 50, 60, 70, 0,
                          40, 30, 20, 10, 0, 100, 0, 100, 60, 50, 0, 70};
    auto v = history_view(cfg, table, 0, 3);
    CHECK(*v.own_first == 10);
    CHECK(*v.own_lag1 == 40);
    CHECK(*v.own_lag2 == 10);
    CHECK(*v.mean_others_lag1 == doctest::Approx(20.0));
    CHECK_FALSE(v.zero_count_lag1.has_value());

    // Permuting the other two groups' round-2 contributions changes nothing
    // an agent in group 2 can see under group feedback.
    auto permuted = table;
    std::swap(permuted.contribution[12 + 4], permuted.contribution[12 + 8]);
    std::swap(permuted.contribution[12 + 5], permuted.contribution[12 + 11]);
    for (SubjectId s : {0, 1, 2, 3})
        CHECK(history_view(cfg, permuted, s, 3) == history_view(cfg, table, s, 3));

    cfg.treatment = Treatment::SessionFeedback;
    v = history_view(cfg, table, 0, 3);
    CHECK(*v.zero_count_lag1 == 3);
    CHECK(*v.full_count_lag1 == 2);
}

TEST_CASE("run spec validation") {
    auto spec = uniform_roster(AgentKind::FreeRider);
    spec.roster.pop_back();
    CHECK_THROWS_AS(spec.validate(), StructuralError);
    spec = uniform_roster(AgentKind::FreeRider);
    spec.replications = 0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec = mixed_roster(Treatment::GroupFeedback);
    spec.roster[4].coefficients = coefficient_preset("us_session");
    CHECK_THROWS_AS(spec.validate(), StructuralError);
}

TEST_CASE("run configuration file with shorthand") {
    const auto j = nlohmann::json::parse(R"({
        "config": {"treatment": "session", "rounds": 10},
        "seed": 99, "replications": 2, "session_prefix": "t",
        "roster": ["3 x free_rider",
                   {"count": 9, "kind": "tobit_latent", "coefficients": "us_session",
                    "noise_sigma": 20, "initial_draw": {"family": "uniform", "mean": 50, "spread": 10}}]
    })");
    const auto spec = run_spec_from_json(j);
    CHECK(spec.roster.size() == 12);
    CHECK(spec.roster[0].kind == AgentKind::FreeRider);
    CHECK(spec.roster[11].coefficients == coefficient_preset("us_session"));
    CHECK(spec.roster[11].initial_draw.family == DrawFamily::Uniform);
    CHECK(spec.config.seed == 99);

    // Roster descriptors survive the round trip through the log header.
    const auto log = run_session(spec, 0);
    CHECK(roster_from_json(log.header.roster) == spec.roster);

    CHECK_THROWS_AS(run_spec_from_json(nlohmann::json::parse(R"({"roster": ["12 x nobody"]})")),
                    DomainError);
    CHECK_THROWS_AS(run_spec_from_json(nlohmann::json::parse(R"({"roster": ["11 x free_rider"]})")),
                    StructuralError);
}

TEST_CASE("batch output files") {
    auto spec = mixed_roster(Treatment::GroupFeedback);
    spec.replications = 2;
    spec.config.rounds = 5;
    const auto dir = std::filesystem::temp_directory_path() / "vcm_test_batch";
    std::filesystem::remove_all(dir);
    const auto batch = run_batch(spec);
    write_batch(batch, dir.string());
    for (const auto& log : batch.logs) {
        const auto back = load_log((dir / (log.header.session_id + ".jsonl")).string());
        CHECK(back == log);
    }
    CHECK(std::filesystem::exists(dir / "summary.csv"));
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(write_batch(batch, "/proc/definitely/not/writable"), IoError);
}
