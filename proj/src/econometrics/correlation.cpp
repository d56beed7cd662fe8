#include "vcm/econometrics/correlation.hpp"
#include "vcm/econometrics/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "vcm/econometrics/normal.hpp"
#include "vcm/errors.hpp"

namespace vcm {

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw StructuralError("correlation series differ in length");
    if (x.size() < 3) throw DomainError("correlation needs at least 3 pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0;
    double my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0;
    double syy = 0;
    double sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Correlation c;
    c.n = x.size();
    if (sxx == 0.0 || syy == 0.0) {
        c.r = std::numeric_limits<double>::quiet_NaN();
        return c;
    }
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    c.defined = true;
    return c;
}

bool classify_free_rider(Tokens contribution, Tokens endowment) {
    if (contribution < 0 || contribution > endowment)
        throw DomainError(fmt::format("contribution {} outside [0, {}]", contribution, endowment));
    return 3 * contribution < endowment;
}

ReciprocityMetrics reciprocity_metrics(const std::vector<SessionLog>& logs, RoundRange rounds) {
    ReciprocityMetrics m;
    std::vector<double> pooled_x;
    std::vector<double> pooled_fr;
    double r_sum = 0;
    for (const auto& log : logs) {
        validate_log(log);
        const auto& cfg = log.header.config;
        const auto table = tabulate(log);
        for (SubjectId i = 0; i < table.subjects; ++i) {
            ++m.subjects;
            std::vector<double> own;
            std::vector<double> others_mean;
            for (int t = 2; t <= table.rounds; ++t) {
                if (!rounds.contains(t)) continue;
                Tokens sum = 0;
                int peers = 0;
                int free_riders = 0;
                for (SubjectId j = 0; j < table.subjects; ++j) {
                    if (j == i || table.g(t - 1, j) != table.g(t - 1, i)) continue;
                    sum += table.x(t - 1, j);
                    ++peers;
                    free_riders += classify_free_rider(table.x(t - 1, j), cfg.endowment);
                }
                own.push_back(static_cast<double>(table.x(t, i)));
                others_mean.push_back(static_cast<double>(sum) / peers);
                pooled_x.push_back(own.back());
                pooled_fr.push_back(free_riders);
            }
            if (own.size() < 3) {
                ++m.subjects_excluded;
                continue;
            }
            const auto c = pearson_r(own, others_mean);
            if (!c.defined) {
                ++m.subjects_excluded;
                continue;
            }
            ++m.subjects_used;
            r_sum += c.r;
        }
    }
    m.mean_individual_r = m.subjects_used > 0 ? r_sum / m.subjects_used
                                              : std::numeric_limits<double>::quiet_NaN();
    if (pooled_x.size() >= 3)
        m.pooled_free_rider = pearson_r(pooled_x, pooled_fr);
    else
        m.pooled_free_rider = {std::numeric_limits<double>::quiet_NaN(), pooled_x.size(), false};
    return m;
}

ZTest coeff_diff_z(double b1, double se1, double b2, double se2) {
    if (!(se1 > 0.0) || !(se2 > 0.0)) throw DomainError("standard errors must be positive");
    const double z = (b1 - b2) / std::sqrt(se1 * se1 + se2 * se2);
    return {z, stats::two_tailed_p(z)};
}

ZTest fisher_rz_diff(double r1, long n1, double r2, long n2) {
    if (!(std::fabs(r1) < 1.0) || !(std::fabs(r2) < 1.0))
        throw DomainError("Fisher transform needs |r| < 1");
    if (n1 < 4 || n2 < 4) throw DomainError("Fisher comparison needs n >= 4 in each sample");
    const double z = (std::atanh(r1) - std::atanh(r2)) /
                     std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    return {z, stats::two_tailed_p(z)};
}

}  // namespace vcm
