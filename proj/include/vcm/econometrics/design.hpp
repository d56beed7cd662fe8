#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vcm/session_log.hpp"

namespace vcm {

// One regression observation: subject's contribution in round t >= 3 and the
// lagged features that explain it.
struct DesignRow {
    std::string session_id;
    SubjectId subject_id = 0;
    int cluster_id = 0;
    int round = 0;
    double y = 0;
    double x_first = 0;
    double x_lag1 = 0;
    double x_lag2 = 0;
    double over_lag1 = 0;
    double under_lag1 = 0;
    // Among the other session members at t-1; SessionFeedback logs only.
    std::optional<int> zero_count_lag1;
    std::optional<int> full_count_lag1;
};

struct RoundRange {
    int first = 1;
    int last = 1 << 30;
    bool contains(int t) const noexcept { return t >= first && t <= last; }
};

// Rows for every subject and round >= 3 (within `rounds`). cluster_id equals
// subject_id. Throws StructuralError for an invalid log.
std::vector<DesignRow> build_design(const SessionLog& log, RoundRange rounds = {});

// Pools several logs; cluster ids are renumbered so that subjects of
// different sessions never share a cluster.
std::vector<DesignRow> build_design(const std::vector<SessionLog>& logs, RoundRange rounds = {});

struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> clusters;
    std::vector<std::string> names;
};

inline const std::vector<std::string>& regressor_names() {
    static const std::vector<std::string> names{"intercept", "first",      "lag1",       "lag2",
                                                "over",      "under",      "zero_count", "full_count"};
    return names;
}

// Intercept plus the five own/group regressors, and the two session counts
// when every row carries them.
DesignMatrix to_matrix(const std::vector<DesignRow>& rows);

// Parses "a..b" (either side may be empty).
RoundRange parse_round_range(const std::string& s);

}  // namespace vcm
