#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vcm/econometrics/design.hpp"
#include "vcm/session_log.hpp"

namespace vcm {

struct Correlation {
    double r = 0;  // NaN when undefined
    std::size_t n = 0;
    bool defined = false;
};

// Sample Pearson correlation. n < 3 is a DomainError; a constant series gives
// an undefined (flagged NaN) result rather than an exception.
Correlation pearson_r(std::span<const double> x, std::span<const double> y);

// Contribution strictly below e/3; with integer tokens at e=100 that is <= 33.
bool classify_free_rider(Tokens contribution, Tokens endowment);

struct ReciprocityMetrics {
    int subjects = 0;
    int subjects_used = 0;       // nonconstant series
    int subjects_excluded = 0;
    // Mean over subjects of corr(x_{i,t}, mean of the other group members at t-1).
    double mean_individual_r = 0;
    // One correlation over all (subject, round) pairs of the cell:
    // x_{i,t} vs free riders among i's group partners at t-1.
    Correlation pooled_free_rider;
};

// Rounds t range over 2..T intersected with `rounds`.
ReciprocityMetrics reciprocity_metrics(const std::vector<SessionLog>& logs, RoundRange rounds = {});

}  // namespace vcm
