#include "vcm/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "vcm/errors.hpp"

namespace vcm {

std::string to_string(AgentKind k) {
    switch (k) {
    case AgentKind::FreeRider: return "free_rider";
    case AgentKind::FullCooperator: return "full_cooperator";
    case AgentKind::ConditionalCooperator: return "conditional_cooperator";
    case AgentKind::TobitLatent: return "tobit_latent";
    }
    return "?";
}

AgentKind parse_agent_kind(const std::string& s) {
    if (s == "free_rider") return AgentKind::FreeRider;
    if (s == "full_cooperator") return AgentKind::FullCooperator;
    if (s == "conditional_cooperator") return AgentKind::ConditionalCooperator;
    if (s == "tobit_latent") return AgentKind::TobitLatent;
    throw DomainError("unknown agent kind '" + s + "'");
}

std::string to_string(DrawFamily f) {
    switch (f) {
    case DrawFamily::TruncatedNormal: return "truncated_normal";
    case DrawFamily::Uniform: return "uniform";
    case DrawFamily::Constant: return "constant";
    }
    return "?";
}

DrawFamily parse_draw_family(const std::string& s) {
    if (s == "truncated_normal") return DrawFamily::TruncatedNormal;
    if (s == "uniform") return DrawFamily::Uniform;
    if (s == "constant") return DrawFamily::Constant;
    throw DomainError("unknown draw family '" + s + "'");
}

CoefficientRecord coefficient_preset(const std::string& name) {
    if (name == "iceland_group") return {-11.56, 0.28, 0.70, 0.25, -0.31, 0.10, {}, {}};
    if (name == "us_group") return {-32.67, 0.34, 1.11, 0.26, -0.42, 0.23, {}, {}};
    if (name == "iceland_session") return {-5.78, 0.16, 0.67, 0.39, -0.24, -0.01, -1.04, -0.85};
    if (name == "us_session") return {-22.85, 0.19, 1.07, 0.43, -0.61, 0.24, -1.27, -1.19};
    throw LookupError("unknown coefficient preset '" + name + "'");
}

Tokens round_half_up(double v, Tokens endowment) {
    const double r = std::floor(v + 0.5);
    return static_cast<Tokens>(std::clamp(r, 0.0, static_cast<double>(endowment)));
}

Tokens draw_initial(const InitialDraw& draw, Tokens endowment, Rng& rng) {
    const double hi = static_cast<double>(endowment);
    switch (draw.family) {
    case DrawFamily::Constant: return round_half_up(draw.mean, endowment);
    case DrawFamily::Uniform: {
        const double lo = std::clamp(draw.mean - draw.spread, 0.0, hi);
        const double up = std::clamp(draw.mean + draw.spread, 0.0, hi);
        if (up <= lo) return round_half_up(lo, endowment);
        return round_half_up(std::uniform_real_distribution<double>(lo, up)(rng), endowment);
    }
    case DrawFamily::TruncatedNormal: {
        if (draw.spread <= 0) return round_half_up(draw.mean, endowment);
        std::normal_distribution<double> normal(draw.mean, draw.spread);
        // Rejection; gives up to clamping if the window carries almost no mass.
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double v = normal(rng);
            if (v >= 0.0 && v <= hi) return round_half_up(v, endowment);
        }
        return round_half_up(draw.mean, endowment);
    }
    }
    return 0;
}

void AgentSpec::validate() const {
    if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be nonnegative");
    if (kind == AgentKind::TobitLatent && !coefficients)
        throw ContractError("tobit_latent agent requires coefficients");
    if (!(initial_draw.spread >= 0.0)) throw DomainError("initial draw spread must be nonnegative");
}

double latent_predictor(const CoefficientRecord& c, const HistoryView& v) {
    auto need = [](const auto& field, const char* name) {
        if (!field) throw ContractError(fmt::format("history view lacks {}", name));
        return static_cast<double>(*field);
    };
    const double first = need(v.own_first, "own_first");
    const double lag1 = need(v.own_lag1, "own_lag1");
    const double lag2 = need(v.own_lag2, "own_lag2");
    const double others = need(v.mean_others_lag1, "mean_others_lag1");
    const double over = std::max(lag1 - others, 0.0);
    const double under = std::max(others - lag1, 0.0);

    double latent = c.intercept + c.beta_first * first + c.beta_lag1 * lag1 +
                    c.beta_lag2 * lag2 + c.beta_over * over + c.beta_under * under;
    if (c.beta_zero_count) latent += *c.beta_zero_count * need(v.zero_count_lag1, "zero_count_lag1");
    if (c.beta_full_count) latent += *c.beta_full_count * need(v.full_count_lag1, "full_count_lag1");
    return latent;
}

Tokens agent_decide(const AgentSpec& spec, const HistoryView& view, Tokens endowment, Rng& rng) {
    if (view.round < 1) throw ContractError("round must be >= 1");
    switch (spec.kind) {
    case AgentKind::FreeRider: return 0;
    case AgentKind::FullCooperator: return endowment;
    case AgentKind::ConditionalCooperator:
        if (view.round == 1) return draw_initial(spec.initial_draw, endowment, rng);
        if (!view.mean_others_lag1) throw ContractError("history view lacks mean_others_lag1");
        return round_half_up(*view.mean_others_lag1, endowment);
    case AgentKind::TobitLatent: {
        if (!spec.coefficients) throw ContractError("tobit_latent agent requires coefficients");
        if (view.round == 1) return draw_initial(spec.initial_draw, endowment, rng);
        HistoryView v = view;
        if (view.round == 2) v.own_lag2 = v.own_lag1;
        double latent = latent_predictor(*spec.coefficients, v);
        if (spec.noise_sigma > 0)
            latent += std::normal_distribution<double>(0.0, spec.noise_sigma)(rng);
        return round_half_up(std::clamp(latent, 0.0, static_cast<double>(endowment)), endowment);
    }
    }
    return 0;
}

}  // namespace vcm
