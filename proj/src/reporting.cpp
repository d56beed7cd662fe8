#include "vcm/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "vcm/econometrics/inference.hpp"
#include "vcm/errors.hpp"

namespace vcm {

namespace {

bool same_game(const SessionConfig& a, const SessionConfig& b) {
    return a.endowment == b.endowment && a.multiplier == b.multiplier &&
           a.group_size == b.group_size && a.group_count == b.group_count &&
           a.rounds == b.rounds && a.treatment == b.treatment;
}

std::string fixed2(double v) {
    if (!std::isfinite(v)) return "n/a";
    return fmt::format("{:.2f}", v);
}

std::string pad(const std::string& s, std::size_t w) {
    return s.size() >= w ? s + ' ' : s + std::string(w - s.size(), ' ');
}

std::string display_name(const std::string& regressor) {
    if (regressor == "intercept") return "Intercept";
    if (regressor == "first") return "Own contribution, round 1";
    if (regressor == "lag1") return "Own contribution, t-1";
    if (regressor == "lag2") return "Own contribution, t-2";
    if (regressor == "over") return "Over-contribution vs group mean, t-1";
    if (regressor == "under") return "Under-contribution vs group mean, t-1";
    if (regressor == "zero_count") return "Zero contributors in session, t-1";
    if (regressor == "full_count") return "Full contributors in session, t-1";
    return regressor;
}

void open_or_throw(std::ofstream& out, const std::string& path) {
    out.open(path, std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
}

}  // namespace

std::vector<double> per_round_means(const std::vector<SessionLog>& logs) {
    if (logs.empty()) return {};
    const auto& cfg = logs.front().header.config;
    for (const auto& log : logs) {
        if (!same_game(cfg, log.header.config))
            throw StructuralError(fmt::format("log {} has a different game configuration than {}",
                                              log.header.session_id,
                                              logs.front().header.session_id));
        validate_log(log);
        if (log.completed_rounds() != cfg.rounds)
            throw StructuralError(fmt::format("log {} is incomplete", log.header.session_id));
    }
    const int n = cfg.session_size();
    std::vector<double> means(cfg.rounds);
    for (int t = 1; t <= cfg.rounds; ++t) {
        Tokens sum = 0;
        for (const auto& log : logs)
            for (int s = 0; s < n; ++s)
                sum += log.records[static_cast<std::size_t>(t - 1) * n + s].contribution;
        means[t - 1] = static_cast<double>(sum) / (static_cast<double>(n) * logs.size());
    }
    return means;
}

AnalysisReport build_report(const std::vector<CellInput>& cells,
                            const std::vector<std::pair<std::string, std::string>>& comparisons,
                            RoundRange rounds) {
    AnalysisReport report;
    report.rounds = rounds;
    for (const auto& in : cells) {
        CellReport c;
        c.label = in.label;
        c.sources = in.sources;
        for (const auto& log : in.logs) {
            c.seeds.push_back(log.header.seed);
            c.subjects += log.header.config.session_size();
        }
        c.means = per_round_means(in.logs);
        c.reciprocity = reciprocity_metrics(in.logs, rounds);
        try {
            const auto rows = build_design(in.logs, rounds);
            if (rows.empty()) throw StructuralError("no regression rows in the selected rounds");
            const auto m = to_matrix(rows);
            const double upper = static_cast<double>(in.logs.front().header.config.endowment);
            c.fit = tobit_fit(m.X, m.y, 0.0, upper, m.clusters, m.names);
        } catch (const std::exception& e) {
            c.fit_error = e.what();
        }
        report.cells.push_back(std::move(c));
    }

    auto find = [&](const std::string& label) -> const CellReport& {
        for (const auto& c : report.cells)
            if (c.label == label) return c;
        throw LookupError("unknown cell '" + label + "' in comparison");
    };
    for (const auto& [a, b] : comparisons) {
        const auto& ca = find(a);
        const auto& cb = find(b);
        Comparison cmp{a, b, {}};
        if (ca.fit && cb.fit) {
            for (std::size_t i = 0; i < ca.fit->names.size(); ++i) {
                const auto& name = ca.fit->names[i];
                const auto it = std::find(cb.fit->names.begin(), cb.fit->names.end(), name);
                if (it == cb.fit->names.end()) continue;
                const auto j = static_cast<Eigen::Index>(it - cb.fit->names.begin());
                const auto ii = static_cast<Eigen::Index>(i);
                const auto zt = coeff_diff_z(ca.fit->beta(ii), ca.fit->se(ii), cb.fit->beta(j),
                                             cb.fit->se(j));
                cmp.rows.push_back({name, ca.fit->beta(ii) - cb.fit->beta(j), zt.z, zt.p_two_tailed});
            }
        }
        report.comparisons.push_back(std::move(cmp));
    }
    return report;
}

std::string significance_stars(double p) {
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

void write_table3(const AnalysisReport& report, std::ostream& out) {
    constexpr std::size_t w0 = 44;
    constexpr std::size_t w = 18;
    out << pad("Reciprocity", w0);
    for (const auto& c : report.cells) out << pad(c.label, w);
    out << '\n';
    if (report.cells.empty()) return;
    out << pad("Number of subjects", w0);
    for (const auto& c : report.cells) out << pad(std::to_string(c.subjects), w);
    out << '\n' << pad("Mean individual correlation", w0);
    for (const auto& c : report.cells) out << pad(fixed2(c.reciprocity.mean_individual_r), w);
    out << '\n' << pad("Subjects excluded (constant series)", w0);
    for (const auto& c : report.cells) out << pad(std::to_string(c.reciprocity.subjects_excluded), w);
    out << '\n' << pad("Correlation with free riders met at t-1", w0);
    for (const auto& c : report.cells) {
        const auto& r = c.reciprocity.pooled_free_rider;
        out << pad(r.defined ? fixed2(r.r) : std::string("undefined"), w);
    }
    out << '\n' << pad("Pairs in pooled correlation", w0);
    for (const auto& c : report.cells) out << pad(std::to_string(c.reciprocity.pooled_free_rider.n), w);
    out << '\n';
}

void write_table4(const AnalysisReport& report, std::ostream& out) {
    constexpr std::size_t w0 = 40;
    constexpr std::size_t w = 20;
    out << pad("Double-censored Tobit (clustered SE)", w0);
    for (const auto& c : report.cells) out << pad(c.label, w);
    out << '\n';
    if (report.cells.empty()) return;
    for (const auto& name : regressor_names()) {
        bool any = false;
        for (const auto& c : report.cells)
            if (c.fit && std::find(c.fit->names.begin(), c.fit->names.end(), name) != c.fit->names.end())
                any = true;
        if (!any) continue;
        out << pad(display_name(name), w0);
        for (const auto& c : report.cells) {
            std::string cell;
            if (c.fit) {
                const auto it = std::find(c.fit->names.begin(), c.fit->names.end(), name);
                if (it != c.fit->names.end()) {
                    const auto j = static_cast<Eigen::Index>(it - c.fit->names.begin());
                    cell = fmt::format("{}{} ({})", fixed2(c.fit->beta(j)),
                                       significance_stars(c.fit->p(j)), fixed2(c.fit->se(j)));
                }
            }
            out << pad(cell, w);
        }
        out << '\n';
    }
    auto diag = [&](const std::string& title, auto get) {
        out << pad(title, w0);
        for (const auto& c : report.cells) out << pad(c.fit ? get(*c.fit) : std::string("-"), w);
        out << '\n';
    };
    diag("Sigma", [](const TobitFit& f) { return fixed2(f.sigma); });
    diag("N", [](const TobitFit& f) { return std::to_string(f.n); });
    diag("Clusters", [](const TobitFit& f) { return std::to_string(f.clusters); });
    diag("McFadden pseudo R^2", [](const TobitFit& f) { return fixed2(f.pseudo_r2); });
    diag("LLF", [](const TobitFit& f) { return fixed2(f.llf); });
    diag("Correlation observed - predicted",
         [](const TobitFit& f) { return fixed2(f.corr_observed_predicted); });
    diag("% censored at 0",
         [](const TobitFit& f) { return fmt::format("{:.0f}%", 100 * f.censored_low_share); });
    diag("% censored at e",
         [](const TobitFit& f) { return fmt::format("{:.0f}%", 100 * f.censored_high_share); });
    for (const auto& c : report.cells)
        if (!c.fit) out << "fit failed for " << c.label << ": " << c.fit_error << '\n';
    out << "** p < 0.01, * p < 0.05 (two-tailed)\n";
}

void write_table5(const AnalysisReport& report, std::ostream& out) {
    constexpr std::size_t w0 = 40;
    constexpr std::size_t w = 16;
    std::vector<std::size_t> widths;
    for (const auto& c : report.comparisons)
        widths.push_back(std::max(w, c.first.size() + c.second.size() + 5));
    out << pad("Coefficient differences", w0);
    for (std::size_t i = 0; i < report.comparisons.size(); ++i) {
        const auto& c = report.comparisons[i];
        out << pad(c.first + " - " + c.second, widths[i]) << pad("|z|", w);
    }
    out << '\n';
    if (report.comparisons.empty()) return;
    for (const auto& name : regressor_names()) {
        bool any = false;
        for (const auto& c : report.comparisons)
            for (const auto& r : c.rows) any = any || r.name == name;
        if (!any) continue;
        out << pad(display_name(name), w0);
        for (std::size_t i = 0; i < report.comparisons.size(); ++i) {
            const auto& c = report.comparisons[i];
            const auto it = std::find_if(c.rows.begin(), c.rows.end(),
                                         [&](const ComparisonRow& r) { return r.name == name; });
            if (it == c.rows.end()) {
                out << pad("", widths[i]) << pad("", w);
                continue;
            }
            out << pad(fixed2(it->difference), widths[i])
                << pad(fixed2(std::fabs(it->z)) + significance_stars(it->p), w);
        }
        out << '\n';
    }
    out << "** p < 0.01, * p < 0.05 (two-tailed)\n";
}

void write_means_csv(const AnalysisReport& report, std::ostream& out) {
    out << "round";
    for (const auto& c : report.cells) out << ',' << c.label;
    out << '\n';
    std::size_t rounds = 0;
    for (const auto& c : report.cells) rounds = std::max(rounds, c.means.size());
    for (std::size_t t = 1; t <= rounds; ++t) {
        if (!report.rounds.contains(static_cast<int>(t))) continue;
        out << t;
        for (const auto& c : report.cells) {
            out << ',';
            if (t <= c.means.size()) out << fmt::format("{}", c.means[t - 1]);
        }
        out << '\n';
    }
}

std::vector<std::pair<std::string, std::vector<double>>> read_means_csv(std::istream& in) {
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    std::string line;
    if (!std::getline(in, line)) throw StructuralError("means CSV is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        if (cell != "round") throw StructuralError("means CSV must start with a round column");
        while (std::getline(ss, cell, ',')) cols.push_back({cell, {}});
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        for (auto& col : cols) {
            if (!std::getline(ss, cell, ',') || cell.empty()) continue;
            col.second.push_back(std::stod(cell));
        }
    }
    return cols;
}

void render_report(const AnalysisReport& report, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir, ec.message());
    const std::filesystem::path base(dir);
    auto emit = [&](const std::string& name, auto writer) {
        const auto path = (base / name).string();
        std::ofstream out;
        open_or_throw(out, path);
        writer(out);
        if (!out) throw IoError(path, "write failed");
    };
    emit("table3.txt", [&](std::ostream& o) { write_table3(report, o); });
    emit("table4.txt", [&](std::ostream& o) { write_table4(report, o); });
    emit("table5.txt", [&](std::ostream& o) { write_table5(report, o); });
    emit("means.csv", [&](std::ostream& o) { write_means_csv(report, o); });
    emit("coefficients.csv", [&](std::ostream& o) {
        o << "cell,coefficient,estimate,clustered_se,z,p\n";
        for (const auto& c : report.cells) {
            if (!c.fit) continue;
            for (std::size_t j = 0; j < c.fit->names.size(); ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                o << fmt::format("{},{},{},{},{},{}\n", c.label, c.fit->names[j], c.fit->beta(jj),
                                 c.fit->se(jj), c.fit->z(jj), c.fit->p(jj));
            }
        }
    });
}

void write_fit_kv(const TobitFit& fit, const std::string& label, std::ostream& out) {
    out << "cell=" << label << '\n';
    out << "n=" << fit.n << '\n';
    out << "clusters=" << fit.clusters << '\n';
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out << fmt::format("beta.{}={}\n", fit.names[j], fit.beta(jj));
        out << fmt::format("se.{}={}\n", fit.names[j], fit.se(jj));
    }
    out << fmt::format("sigma={}\n", fit.sigma);
    out << fmt::format("se.sigma={}\n", fit.sigma_se);
    out << fmt::format("llf={}\n", fit.llf);
    out << fmt::format("llf_null={}\n", fit.llf_null);
    out << fmt::format("pseudo_r2={}\n", fit.pseudo_r2);
    out << fmt::format("corr_observed_predicted={}\n", fit.corr_observed_predicted);
    out << fmt::format("censored_at_lower={}\n", fit.censored_low_share);
    out << fmt::format("censored_at_upper={}\n", fit.censored_high_share);
    out << fmt::format("iterations={}\n", fit.iterations);
    out << fmt::format("gradient_max_norm={}\n", fit.gradient_norm);
}

void write_fit_table(const TobitFit& fit, std::ostream& out) {
    out << "coefficient,estimate,clustered_se\n";
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out << fmt::format("{},{},{}\n", fit.names[j], fit.beta(jj), fit.se(jj));
    }
    out << fmt::format("sigma,{},{}\n", fit.sigma, fit.sigma_se);
}

}  // namespace vcm
