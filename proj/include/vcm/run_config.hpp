#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "vcm/agents.hpp"
#include "vcm/game.hpp"

namespace vcm {

struct RunSpec {
    SessionConfig config;
    std::vector<AgentSpec> roster;
    int replications = 1;
    std::uint64_t seed = 0;
    std::string output_path = "out";
    std::string session_prefix = "sim";

    // Throws StructuralError/DomainError: roster size must equal the session
    // size, replications >= 1, every agent valid.
    void validate() const;
};

nlohmann::ordered_json agent_to_json(const AgentSpec& a);
AgentSpec agent_from_json(const nlohmann::json& j);
nlohmann::ordered_json roster_to_json(const std::vector<AgentSpec>& roster);

// Roster entries are either objects (optionally with "count": k) or the
// shorthand string "k x kind" for parameter-free kinds, e.g. "3 x free_rider".
std::vector<AgentSpec> roster_from_json(const nlohmann::json& j);

RunSpec run_spec_from_json(const nlohmann::json& j);
RunSpec load_run_spec(const std::string& path);

}  // namespace vcm
