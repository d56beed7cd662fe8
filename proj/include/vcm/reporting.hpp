#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vcm/econometrics/correlation.hpp"
#include "vcm/econometrics/design.hpp"
#include "vcm/econometrics/tobit.hpp"
#include "vcm/session_log.hpp"

namespace vcm {

// Mean contribution of all subjects at each round 1..T across the logs.
// Logs must agree on every game parameter (seed and conversion rate may
// differ); otherwise StructuralError.
std::vector<double> per_round_means(const std::vector<SessionLog>& logs);

struct CellInput {
    std::string label;
    std::vector<SessionLog> logs;
    std::vector<std::string> sources;
};

struct CellReport {
    std::string label;
    std::vector<std::string> sources;
    std::vector<std::uint64_t> seeds;
    std::vector<double> means;  // rounds 1..T
    int subjects = 0;
    ReciprocityMetrics reciprocity;
    std::optional<TobitFit> fit;
    std::string fit_error;
};

struct ComparisonRow {
    std::string name;
    double difference = 0;
    double z = 0;
    double p = 1;
};

struct Comparison {
    std::string first;
    std::string second;
    std::vector<ComparisonRow> rows;  // first minus second, shared regressors
};

struct AnalysisReport {
    std::vector<CellReport> cells;
    std::vector<Comparison> comparisons;
    RoundRange rounds;
    std::string generated_at;
};

// Fits every cell (failures are recorded per cell, not thrown) and computes
// the requested pairwise comparisons from the fitted coefficients.
AnalysisReport build_report(const std::vector<CellInput>& cells,
                            const std::vector<std::pair<std::string, std::string>>& comparisons,
                            RoundRange rounds = {});

// "**" for p < 0.01, "*" for p < 0.05, "" otherwise.
std::string significance_stars(double p);

// Writes table3.txt, table4.txt, table5.txt, means.csv and coefficients.csv
// into `dir`.
void render_report(const AnalysisReport& report, const std::string& dir);

void write_table3(const AnalysisReport& report, std::ostream& out);
void write_table4(const AnalysisReport& report, std::ostream& out);
void write_table5(const AnalysisReport& report, std::ostream& out);
// Values are written with shortest round-trip formatting.
void write_means_csv(const AnalysisReport& report, std::ostream& out);

// Reads a means CSV back: column label -> series.
std::vector<std::pair<std::string, std::vector<double>>> read_means_csv(std::istream& in);

// Flat key=value dump of a fit, and a (coefficient, estimate, clustered_se)
// table.
void write_fit_kv(const TobitFit& fit, const std::string& label, std::ostream& out);
void write_fit_table(const TobitFit& fit, std::ostream& out);

}  // namespace vcm
