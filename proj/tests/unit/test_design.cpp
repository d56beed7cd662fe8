#include "doctest.h"

#include "vcm/econometrics/design.hpp"
#include "vcm/errors.hpp"
#include "vcm/simulator.hpp"

using namespace vcm;

namespace {

SessionLog simulated(Treatment t, std::uint64_t seed) {
    RunSpec spec;
    spec.config.treatment = t;
    spec.seed = seed;
    AgentSpec tl;
    tl.kind = AgentKind::TobitLatent;
    tl.coefficients = coefficient_preset(t == Treatment::SessionFeedback ? "iceland_session" : "iceland_group");
    spec.roster.assign(12, tl);
    return run_session(spec, 0);
}

// Builds a log from a fixed contribution table and fixed groups.
SessionLog handmade(const std::vector<std::vector<Tokens>>& x, const std::vector<std::vector<GroupId>>& g,
                    Treatment t = Treatment::GroupFeedback) {
    SessionLog log;
    log.header.config.treatment = t;
    log.header.config.rounds = static_cast<int>(x.size());
    log.header.session_id = "hand";
    for (std::size_t r = 0; r < x.size(); ++r) {
        GroupAssignment a;
        a.round = static_cast<int>(r) + 1;
        a.group_of = g[r];
        const auto pay = compute_round_payoffs(log.header.config, a, x[r]);
        for (SubjectId s = 0; s < 12; ++s)
            log.records.push_back({"hand", a.round, s, g[r][s], x[r][s], pay[s]});
    }
    return log;
}

}  // namespace

TEST_CASE("pooled row counts") {
    std::vector<SessionLog> logs;
    for (std::uint64_t s = 1; s <= 4; ++s) logs.push_back(simulated(Treatment::GroupFeedback, s));
    CHECK(build_design(std::vector<SessionLog>(logs.begin(), logs.begin() + 3)).size() == 2808);
    const auto rows = build_design(logs);
    CHECK(rows.size() == 3744);
    for (const auto& r : rows) {
        CHECK(r.round >= 3);
        CHECK(r.over_lag1 * r.under_lag1 == 0.0);
        CHECK_FALSE(r.zero_count_lag1.has_value());
    }
    CHECK(rows.front().cluster_id == 0);
    CHECK(rows.back().cluster_id == 47);
    CHECK(to_matrix(rows).X.cols() == 6);
}

TEST_CASE("session feedback rows carry counts") {
    const auto rows = build_design(simulated(Treatment::SessionFeedback, 9));
    CHECK(rows.size() == 12 * 78);
    for (const auto& r : rows) {
        REQUIRE(r.zero_count_lag1.has_value());
        CHECK(*r.zero_count_lag1 >= 0);
        CHECK(*r.full_count_lag1 <= 11);
        CHECK(*r.zero_count_lag1 + *r.full_count_lag1 <= 11);
    }
    const auto m = to_matrix(rows);
    CHECK(m.X.cols() == 8);
    CHECK(m.names.back() == "full_count");
}

TEST_CASE("feature definitions on a handmade log") {
    const std::vector<GroupId> groups{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    std::vector<std::vector<Tokens>> x{
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12},
        {70, 10, 20, 30, 20, 20, 20, 20, 0, 100, 100, 0},
        {5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5},
    };
    const auto log = handmade(x, {groups, groups, groups}, Treatment::SessionFeedback);
    const auto rows = build_design(log);
    REQUIRE(rows.size() == 12);
    const auto& r0 = rows[0];
    CHECK(r0.round == 3);
    CHECK(r0.y == 5);
    CHECK(r0.x_first == 1);
    CHECK(r0.x_lag1 == 70);
    CHECK(r0.x_lag2 == 1);
    CHECK(r0.over_lag1 == 50);
    CHECK(r0.under_lag1 == 0);
    CHECK(*r0.zero_count_lag1 == 2);
    CHECK(*r0.full_count_lag1 == 2);
    CHECK(rows[1].under_lag1 == doctest::Approx(30.0));  // others {70,20,30} mean 40
    CHECK(rows[4].over_lag1 == 0);
    CHECK(rows[4].under_lag1 == 0);
    CHECK(*rows[9].full_count_lag1 == 1);  // excludes self
    CHECK(*rows[8].zero_count_lag1 == 1);

    RoundRange late{3, 3};
    CHECK(build_design(log, late).size() == 12);
    CHECK(build_design(log, RoundRange{4, 10}).empty());
}

TEST_CASE("round range parsing") {
    CHECK(parse_round_range("41..80").first == 41);
    CHECK(parse_round_range("41..80").last == 80);
    CHECK(parse_round_range("..10").first == 1);
    CHECK(parse_round_range("5..").last > 80);
    CHECK_THROWS_AS(parse_round_range("abc"), DomainError);
    CHECK_THROWS_AS(parse_round_range("9..3"), DomainError);
}

TEST_CASE("malformed logs are rejected") {
    auto log = simulated(Treatment::GroupFeedback, 3);
    log.records[40].earnings = 1;
    CHECK_THROWS_AS(build_design(log), StructuralError);
}
