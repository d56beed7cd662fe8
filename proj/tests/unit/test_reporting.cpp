#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vcm/econometrics/inference.hpp"
#include "vcm/errors.hpp"
#include "vcm/reporting.hpp"
#include "vcm/simulator.hpp"

using namespace vcm;

namespace {

SessionLog constant_log(Tokens value, int rounds = 5, std::string id = "c") {
    SessionLog log;
    log.header.session_id = id;
    log.header.config.rounds = rounds;
    std::vector<GroupId> g{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    for (int t = 1; t <= rounds; ++t) {
        std::vector<Tokens> x(12, value);
        const auto pay = compute_round_payoffs(log.header.config, {t, g}, x);
        for (SubjectId s = 0; s < 12; ++s) log.records.push_back({id, t, s, g[s], x[s], pay[s]});
    }
    return log;
}

std::vector<SessionLog> cell_logs(const char* preset, Treatment t, std::uint64_t seed, int n) {
    RunSpec spec;
    spec.config.treatment = t;
    spec.seed = seed;
    spec.replications = n;
    AgentSpec tl;
    tl.kind = AgentKind::TobitLatent;
    tl.coefficients = coefficient_preset(preset);
    spec.roster.assign(12, tl);
    return run_batch(spec).logs;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("significance stars") {
    CHECK(significance_stars(0.004) == "**");
    CHECK(significance_stars(0.03) == "*");
    CHECK(significance_stars(0.01) == "*");
    CHECK(significance_stars(0.05) == "");
    CHECK(significance_stars(0.2) == "");
}

TEST_CASE("per round means") {
    for (double m : per_round_means({constant_log(0)})) CHECK(m == 0.0);
    for (double m : per_round_means({constant_log(50)})) CHECK(m == 50.0);
    const auto two = per_round_means({constant_log(40, 5, "a"), constant_log(60, 5, "b")});
    CHECK(two.size() == 5);
    CHECK(two[0] == 50.0);

    auto other = constant_log(10, 5);
    other.header.config.treatment = Treatment::SessionFeedback;
    CHECK_THROWS_AS(per_round_means({constant_log(40), other}), StructuralError);
    CHECK_THROWS_AS(per_round_means({constant_log(40, 5), constant_log(40, 6)}), StructuralError);
    auto seeded = constant_log(30);
    seeded.header.config.seed = 99;
    CHECK_NOTHROW(per_round_means({constant_log(40), seeded}));
}

TEST_CASE("empty report renders header-only files") {
    const auto dir = std::filesystem::temp_directory_path() / "vcm_empty_report";
    std::filesystem::remove_all(dir);
    const auto report = build_report({}, {});
    render_report(report, dir.string());
    for (const char* f : {"table3.txt", "table4.txt", "table5.txt", "means.csv", "coefficients.csv"})
        CHECK(std::filesystem::exists(dir / f));
    std::stringstream means(read_file(dir / "means.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(means, line)) ++lines;
    CHECK(lines == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("full report on simulated cells") {
    std::vector<CellInput> cells{
        {"group", cell_logs("us_group", Treatment::GroupFeedback, 1, 3), {}},
        {"session", cell_logs("us_session", Treatment::SessionFeedback, 2, 3), {}},
    };
    const auto report = build_report(cells, {{"group", "session"}});
    REQUIRE(report.cells.size() == 2);
    for (const auto& c : report.cells) {
        REQUIRE(c.fit.has_value());
        CHECK(c.fit->n == 36 * 78);
        CHECK(c.subjects == 36);
        CHECK(c.seeds.size() == 3);
        CHECK(c.means == per_round_means(cells[&c - report.cells.data()].logs));
    }
    CHECK(report.cells[0].fit->beta.size() == 6);
    CHECK(report.cells[1].fit->beta.size() == 8);

    REQUIRE(report.comparisons.size() == 1);
    const auto& cmp = report.comparisons[0];
    CHECK(cmp.rows.size() == 6);
    const auto& a = *report.cells[0].fit;
    const auto& b = *report.cells[1].fit;
    for (std::size_t j = 0; j < cmp.rows.size(); ++j) {
        const auto want = coeff_diff_z(a.beta(j), a.se(j), b.beta(j), b.se(j));
        CHECK(cmp.rows[j].name == a.names[j]);
        CHECK(cmp.rows[j].z == want.z);
        CHECK(cmp.rows[j].p == want.p_two_tailed);
        CHECK(cmp.rows[j].difference == a.beta(j) - b.beta(j));
    }

    std::stringstream csv;
    write_means_csv(report, csv);
    const auto back = read_means_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "group");
    CHECK(back[0].second == report.cells[0].means);
    CHECK(back[1].second == report.cells[1].means);

    std::stringstream t4;
    write_table4(report, t4);
    CHECK(t4.str().find("Sigma") != std::string::npos);
    CHECK(t4.str().find("McFadden pseudo R^2") != std::string::npos);

    CHECK_THROWS_AS(build_report(cells, {{"group", "missing"}}), LookupError);
}

TEST_CASE("cell failures are recorded, not thrown") {
    std::vector<CellInput> cells{{"flat", {constant_log(0, 10)}, {}}};
    const auto report = build_report(cells, {});
    REQUIRE(report.cells.size() == 1);
    CHECK_FALSE(report.cells[0].fit.has_value());
    CHECK_FALSE(report.cells[0].fit_error.empty());
    std::stringstream t4;
    CHECK_NOTHROW(write_table4(report, t4));
}

TEST_CASE("render to an unwritable location") {
    CHECK_THROWS_AS(render_report(build_report({}, {}), "/proc/nope/out"), IoError);
}
