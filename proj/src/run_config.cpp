#include "vcm/run_config.hpp"

#include <fmt/format.h>
#include <fstream>
#include <regex>

#include "vcm/errors.hpp"
#include "vcm/session_log.hpp"

namespace vcm {

using nlohmann::json;
using nlohmann::ordered_json;

void RunSpec::validate() const {
    config.validate();
    if (static_cast<int>(roster.size()) != config.session_size())
        throw StructuralError(fmt::format("roster has {} agents, session needs {}", roster.size(),
                                          config.session_size()));
    if (replications < 1) throw DomainError("replications must be >= 1");
    for (const auto& a : roster) a.validate();
    for (const auto& a : roster)
        if (a.coefficients && a.coefficients->uses_session_counts() &&
            config.treatment != Treatment::SessionFeedback)
            throw StructuralError("session-count coefficients need session feedback");
}

namespace {

ordered_json coefficients_to_json(const CoefficientRecord& c) {
    ordered_json j;
    j["intercept"] = c.intercept;
    j["beta_first"] = c.beta_first;
    j["beta_lag1"] = c.beta_lag1;
    j["beta_lag2"] = c.beta_lag2;
    j["beta_over"] = c.beta_over;
    j["beta_under"] = c.beta_under;
    if (c.beta_zero_count) j["beta_zero_count"] = *c.beta_zero_count;
    if (c.beta_full_count) j["beta_full_count"] = *c.beta_full_count;
    return j;
}

CoefficientRecord coefficients_from_json(const json& j) {
    if (j.is_string()) return coefficient_preset(j.get<std::string>());
    CoefficientRecord c;
    c.intercept = j.value("intercept", 0.0);
    c.beta_first = j.value("beta_first", 0.0);
    c.beta_lag1 = j.value("beta_lag1", 0.0);
    c.beta_lag2 = j.value("beta_lag2", 0.0);
    c.beta_over = j.value("beta_over", 0.0);
    c.beta_under = j.value("beta_under", 0.0);
    if (j.contains("beta_zero_count")) c.beta_zero_count = j.at("beta_zero_count").get<double>();
    if (j.contains("beta_full_count")) c.beta_full_count = j.at("beta_full_count").get<double>();
    return c;
}

}  // namespace

ordered_json agent_to_json(const AgentSpec& a) {
    ordered_json j;
    j["kind"] = to_string(a.kind);
    if (a.coefficients) j["coefficients"] = coefficients_to_json(*a.coefficients);
    j["noise_sigma"] = a.noise_sigma;
    j["initial_draw"] = {{"family", to_string(a.initial_draw.family)},
                         {"mean", a.initial_draw.mean},
                         {"spread", a.initial_draw.spread}};
    return j;
}

AgentSpec agent_from_json(const json& j) {
    AgentSpec a;
    a.kind = parse_agent_kind(j.at("kind").get<std::string>());
    if (j.contains("coefficients")) a.coefficients = coefficients_from_json(j.at("coefficients"));
    a.noise_sigma = j.value("noise_sigma", a.noise_sigma);
    if (j.contains("initial_draw")) {
        const auto& d = j.at("initial_draw");
        if (d.contains("family")) a.initial_draw.family = parse_draw_family(d.at("family").get<std::string>());
        a.initial_draw.mean = d.value("mean", a.initial_draw.mean);
        a.initial_draw.spread = d.value("spread", a.initial_draw.spread);
    }
    a.validate();
    return a;
}

ordered_json roster_to_json(const std::vector<AgentSpec>& roster) {
    ordered_json arr = ordered_json::array();
    for (const auto& a : roster) arr.push_back(agent_to_json(a));
    return arr;
}

std::vector<AgentSpec> roster_from_json(const json& j) {
    if (!j.is_array()) throw StructuralError("roster must be an array");
    static const std::regex shorthand(R"(^\s*(\d+)\s*[xX*]\s*([a-z_]+)\s*$)");
    std::vector<AgentSpec> roster;
    for (const auto& entry : j) {
        if (entry.is_string()) {
            std::smatch m;
            const std::string s = entry.get<std::string>();
            if (!std::regex_match(s, m, shorthand))
                throw StructuralError("bad roster shorthand '" + s + "' (expected 'k x kind')");
            AgentSpec a;
            a.kind = parse_agent_kind(m[2].str());
            a.validate();
            roster.insert(roster.end(), std::stoul(m[1].str()), a);
            continue;
        }
        const int count = entry.value("count", 1);
        if (count < 0) throw StructuralError("roster count must be nonnegative");
        roster.insert(roster.end(), count, agent_from_json(entry));
    }
    return roster;
}

RunSpec run_spec_from_json(const json& j) {
    RunSpec spec;
    try {
        spec.config = config_from_json(j.value("config", json::object()));
        spec.roster = roster_from_json(j.at("roster"));
        spec.replications = j.value("replications", 1);
        spec.seed = j.value("seed", spec.config.seed);
        spec.config.seed = spec.seed;
        spec.output_path = j.value("output_path", spec.output_path);
        spec.session_prefix = j.value("session_prefix", spec.session_prefix);
    } catch (const json::exception& e) {
        throw StructuralError(std::string("run configuration: ") + e.what());
    }
    spec.validate();
    return spec;
}

RunSpec load_run_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open run configuration");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw IoError(path, e.what());
    }
    try {
        return run_spec_from_json(j);
    } catch (const std::exception& e) {
        throw StructuralError(path + ": " + e.what());
    }
}

}  // namespace vcm
