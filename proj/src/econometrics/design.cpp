#include "vcm/econometrics/design.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "vcm/errors.hpp"

namespace vcm {

std::vector<DesignRow> build_design(const SessionLog& log, RoundRange rounds) {
    validate_log(log);
    const auto& cfg = log.header.config;
    const auto table = tabulate(log);
    const bool counts = cfg.treatment == Treatment::SessionFeedback;
    std::vector<DesignRow> rows;
    rows.reserve(static_cast<std::size_t>(std::max(table.rounds - 2, 0)) * table.subjects);
    for (int t = 3; t <= table.rounds; ++t) {
        if (!rounds.contains(t)) continue;
        for (SubjectId i = 0; i < table.subjects; ++i) {
            DesignRow r;
            r.session_id = log.header.session_id;
            r.subject_id = i;
            r.cluster_id = i;
            r.round = t;
            r.y = static_cast<double>(table.x(t, i));
            r.x_first = static_cast<double>(table.x(1, i));
            r.x_lag1 = static_cast<double>(table.x(t - 1, i));
            r.x_lag2 = static_cast<double>(table.x(t - 2, i));

            Tokens others = 0;
            int peers = 0;
            int zeros = 0;
            int fulls = 0;
            for (SubjectId j = 0; j < table.subjects; ++j) {
                if (j == i) continue;
                const Tokens xj = table.x(t - 1, j);
                if (table.g(t - 1, j) == table.g(t - 1, i)) {
                    others += xj;
                    ++peers;
                }
                zeros += xj == 0;
                fulls += xj == cfg.endowment;
            }
            const double mean_others = static_cast<double>(others) / peers;
            r.over_lag1 = std::max(r.x_lag1 - mean_others, 0.0);
            r.under_lag1 = std::max(mean_others - r.x_lag1, 0.0);
            if (counts) {
                r.zero_count_lag1 = zeros;
                r.full_count_lag1 = fulls;
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::vector<DesignRow> build_design(const std::vector<SessionLog>& logs, RoundRange rounds) {
    std::vector<DesignRow> all;
    int offset = 0;
    for (const auto& log : logs) {
        auto rows = build_design(log, rounds);
        for (auto& r : rows) r.cluster_id += offset;
        offset += log.header.config.session_size();
        all.insert(all.end(), std::make_move_iterator(rows.begin()),
                   std::make_move_iterator(rows.end()));
    }
    return all;
}

DesignMatrix to_matrix(const std::vector<DesignRow>& rows) {
    const bool counts =
        !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const DesignRow& r) {
            return r.zero_count_lag1.has_value() && r.full_count_lag1.has_value();
        });
    const int k = counts ? 8 : 6;
    DesignMatrix m;
    m.names.assign(regressor_names().begin(), regressor_names().begin() + k);
    m.X.resize(static_cast<Eigen::Index>(rows.size()), k);
    m.y.resize(static_cast<Eigen::Index>(rows.size()));
    m.clusters.reserve(rows.size());
    for (Eigen::Index i = 0; i < m.X.rows(); ++i) {
        const auto& r = rows[i];
        m.X(i, 0) = 1.0;
        m.X(i, 1) = r.x_first;
        m.X(i, 2) = r.x_lag1;
        m.X(i, 3) = r.x_lag2;
        m.X(i, 4) = r.over_lag1;
        m.X(i, 5) = r.under_lag1;
        if (counts) {
            m.X(i, 6) = *r.zero_count_lag1;
            m.X(i, 7) = *r.full_count_lag1;
        }
        m.y(i) = r.y;
        m.clusters.push_back(r.cluster_id);
    }
    return m;
}

RoundRange parse_round_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw DomainError("round range must look like a..b");
    RoundRange r;
    try {
        const auto lo = s.substr(0, dots);
        const auto hi = s.substr(dots + 2);
        if (!lo.empty()) r.first = std::stoi(lo);
        if (!hi.empty()) r.last = std::stoi(hi);
    } catch (const std::logic_error&) {
        throw DomainError("round range must look like a..b");
    }
    if (r.first < 1 || r.last < r.first) throw DomainError(fmt::format("empty round range '{}'", s));
    return r;
}

}  // namespace vcm
