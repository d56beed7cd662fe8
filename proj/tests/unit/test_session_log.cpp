#include "doctest.h"

#include <random>
#include <sstream>

#include "vcm/errors.hpp"
#include "vcm/simulator.hpp"

using namespace vcm;

namespace {

SessionLog sample_log(std::uint64_t seed, int rounds = 6) {
    RunSpec spec;
    spec.config.rounds = rounds;
    spec.config.treatment = Treatment::SessionFeedback;
    spec.seed = seed;
    AgentSpec tl;
    tl.kind = AgentKind::TobitLatent;
    tl.coefficients = coefficient_preset("iceland_session");
    spec.roster.assign(12, tl);
    return run_session(spec, 0);
}

}  // namespace

TEST_CASE("jsonl and csv round trips over random logs") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto log = sample_log(seed);
        std::stringstream js;
        write_jsonl(log, js);
        CHECK(read_jsonl(js) == log);

        std::stringstream cs;
        write_csv(log, cs);
        auto back = read_csv(cs, log.header.config);
        CHECK(back.records == log.records);
        CHECK(back.header.config.session_size() == 12);
        CHECK(back.header.config.rounds == log.header.config.rounds);
        CHECK_NOTHROW(validate_log(back));
    }
}

TEST_CASE("csv column order") {
    const auto log = sample_log(3, 1);
    std::stringstream cs;
    write_csv(log, cs);
    std::string header;
    std::getline(cs, header);
    CHECK(header == "session_id,round,subject_id,group_id,contribution,earnings");
}

TEST_CASE("validator rejects tampering") {
    const auto good = sample_log(4);
    CHECK_NOTHROW(validate_log(good));

    auto bad = good;
    bad.records[17].earnings += 0.5;
    CHECK_THROWS_AS(validate_log(bad), StructuralError);

    bad = good;
    std::swap(bad.records[3], bad.records[4]);
    CHECK_THROWS_AS(validate_log(bad), StructuralError);

    bad = good;
    bad.records.pop_back();
    CHECK_THROWS_AS(validate_log(bad), StructuralError);

    bad = good;
    bad.records[0].contribution = 101;
    CHECK_THROWS_AS(validate_log(bad), StructuralError);

    bad = good;
    bad.records[0].group_id = (bad.records[0].group_id + 1) % 3;
    CHECK_THROWS_AS(validate_log(bad), StructuralError);

    // Incomplete logs are fine when marked so, if rounds are whole.
    bad = good;
    bad.header.complete = false;
    bad.records.resize(12 * 2);
    CHECK_NOTHROW(validate_log(bad));
}

TEST_CASE("malformed inputs") {
    std::stringstream empty;
    CHECK_THROWS_AS(read_jsonl(empty), StructuralError);
    std::stringstream garbage("{\"type\":\"header\"\n");
    CHECK_THROWS_AS(read_jsonl(garbage), StructuralError);
    std::stringstream wrong("{\"type\":\"record\"}\n");
    CHECK_THROWS_AS(read_jsonl(wrong), StructuralError);
    std::stringstream csv("a,b\n");
    CHECK_THROWS_AS(read_csv(csv, {}), StructuralError);
    CHECK_THROWS_AS(load_log("/nonexistent/file.jsonl"), IoError);
}
