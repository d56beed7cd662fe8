#pragma once

#include <optional>
#include <string>

#include "vcm/game.hpp"
#include "vcm/rng.hpp"

namespace vcm {

enum class AgentKind { FreeRider, FullCooperator, ConditionalCooperator, TobitLatent };

std::string to_string(AgentKind k);
AgentKind parse_agent_kind(const std::string& s);

// Coefficients of the censored linear contribution rule, in tokens per unit
// of regressor. The two session counts exist only for session-feedback rules.
struct CoefficientRecord {
    double intercept = 0;
    double beta_first = 0;
    double beta_lag1 = 0;
    double beta_lag2 = 0;
    double beta_over = 0;
    double beta_under = 0;
    std::optional<double> beta_zero_count;
    std::optional<double> beta_full_count;

    bool uses_session_counts() const noexcept {
        return beta_zero_count.has_value() || beta_full_count.has_value();
    }
    bool operator==(const CoefficientRecord&) const = default;
};

// Published estimates for the four country x feedback cells, usable as
// generative agents. Names: iceland_group, us_group, iceland_session, us_session.
CoefficientRecord coefficient_preset(const std::string& name);

enum class DrawFamily { TruncatedNormal, Uniform, Constant };

struct InitialDraw {
    DrawFamily family = DrawFamily::TruncatedNormal;
    double mean = 45;
    double spread = 25;  // sd for TruncatedNormal, half-width for Uniform
    bool operator==(const InitialDraw&) const = default;
};

std::string to_string(DrawFamily f);
DrawFamily parse_draw_family(const std::string& s);

// Integer draw on [0, e], rounded half-up.
Tokens draw_initial(const InitialDraw& draw, Tokens endowment, Rng& rng);

struct AgentSpec {
    AgentKind kind = AgentKind::FreeRider;
    std::optional<CoefficientRecord> coefficients;
    double noise_sigma = 20;
    InitialDraw initial_draw;

    void validate() const;
    bool operator==(const AgentSpec&) const = default;
};

// What an agent knows when deciding in round t. Lags are absent in rounds
// 1-2; the session counts are present iff the treatment reveals them.
struct HistoryView {
    int round = 1;
    std::optional<Tokens> own_first;
    std::optional<Tokens> own_lag1;
    std::optional<Tokens> own_lag2;
    std::optional<double> mean_others_lag1;
    std::optional<int> zero_count_lag1;
    std::optional<int> full_count_lag1;

    bool operator==(const HistoryView&) const = default;
};

double latent_predictor(const CoefficientRecord& coeffs, const HistoryView& view);

Tokens round_half_up(double v, Tokens endowment);

// Integer contribution in [0, endowment].
Tokens agent_decide(const AgentSpec& spec, const HistoryView& view, Tokens endowment, Rng& rng);

}  // namespace vcm
