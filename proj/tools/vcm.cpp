#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fmt/format.h>
#include <fnmatch.h>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include "vcm/errors.hpp"
#include "vcm/reporting.hpp"
#include "vcm/run_config.hpp"
#include "vcm/server/server.hpp"
#include "vcm/server/snapshot.hpp"
#include "vcm/simulator.hpp"

namespace fs = std::filesystem;
using namespace vcm;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct LogOptions {
    std::vector<std::string> patterns;
    Tokens endowment = 100;
    std::string treatment = "group";
    double multiplier = 2.0;
    double conversion_rate = 0.0018;
};

void add_log_options(CLI::App* cmd, LogOptions& o) {
    cmd->add_option("--logs", o.patterns, "Log files or glob patterns (.jsonl or .csv)")->required();
    cmd->add_option("--endowment", o.endowment, "Endowment assumed for CSV logs");
    cmd->add_option("--treatment", o.treatment, "Treatment assumed for CSV logs (group|session)");
    cmd->add_option("--multiplier", o.multiplier, "Multiplier assumed for CSV logs");
    cmd->add_option("--conversion-rate", o.conversion_rate, "Currency per token for CSV logs");
}

std::vector<std::pair<std::string, SessionLog>> load_logs(const LogOptions& o) {
    SessionConfig base;
    base.endowment = o.endowment;
    base.treatment = parse_treatment(o.treatment);
    base.multiplier = o.multiplier;
    base.conversion_rate = o.conversion_rate;
    std::vector<std::pair<std::string, SessionLog>> out;
    for (const auto& p : o.patterns)
        for (const auto& path : expand_glob(p)) {
            if (fs::path(path).filename() == "summary.csv") continue;
            out.emplace_back(path, load_log(path, base));
        }
    if (out.empty()) throw IoError(fmt::format("{}", fmt::join(o.patterns, " ")), "no logs matched");
    return out;
}

std::string cell_key(const std::string& mode, const std::string& path, const SessionLog& log) {
    if (mode == "treatment") return to_string(log.header.config.treatment);
    if (mode == "prefix") {
        const auto& id = log.header.session_id;
        const auto dash = id.rfind("-r");
        return dash == std::string::npos ? id : id.substr(0, dash);
    }
    if (mode == "file") return fs::path(path).stem().string();
    return {};
}

// Cells spec: "treatment", "prefix", "file", or "label=glob,label=glob"
// where each glob is matched against the log paths.
std::vector<CellInput> make_cells(const std::string& spec,
                                  const std::vector<std::pair<std::string, SessionLog>>& logs) {
    std::vector<CellInput> cells;
    auto cell_for = [&](const std::string& label) -> CellInput& {
        for (auto& c : cells)
            if (c.label == label) return c;
        cells.push_back({label, {}, {}});
        return cells.back();
    };
    if (spec == "treatment" || spec == "prefix" || spec == "file") {
        for (const auto& [path, log] : logs) {
            auto& c = cell_for(cell_key(spec, path, log));
            c.logs.push_back(log);
            c.sources.push_back(path);
        }
        return cells;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw DomainError("bad cell spec entry: " + item);
        const auto label = item.substr(0, eq);
        const auto pattern = item.substr(eq + 1);
        auto& c = cell_for(label);
        for (const auto& [path, log] : logs)
            if (::fnmatch(pattern.c_str(), path.c_str(), 0) == 0 ||
                ::fnmatch(pattern.c_str(), fs::path(path).filename().c_str(), 0) == 0) {
                c.logs.push_back(log);
                c.sources.push_back(path);
            }
        if (c.logs.empty()) throw LookupError("cell " + label + " matched no logs");
    }
    return cells;
}

std::string random_token() {
    std::random_device rd;
    return fmt::format("{:08x}{:08x}", rd(), rd());
}

int cmd_simulate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
                 std::optional<int> reps, bool serial) {
    auto spec = load_run_spec(config);
    if (seed) {
        spec.seed = *seed;
        spec.config.seed = *seed;
    }
    if (reps) spec.replications = *reps;
    spec.validate();
    const auto batch = serial ? run_batch_serial(spec) : run_batch(spec);
    write_batch(batch, out);
    std::cout << fmt::format("wrote {} session logs and summary.csv to {}\n", batch.logs.size(), out);
    return 0;
}

int cmd_estimate(const LogOptions& lo, const std::string& label, const std::string& out, const std::string& rounds) {
    const auto logs = load_logs(lo);
    std::vector<SessionLog> plain;
    for (const auto& [p, l] : logs) plain.push_back(l);
    const auto m = to_matrix(build_design(plain, parse_round_range(rounds)));
    const auto fit = tobit_fit(m.X, m.y, 0, static_cast<double>(plain.front().header.config.endowment), m.clusters,
                               m.names);
    {
        std::ofstream f(out);
        if (!f) throw IoError(out, "cannot open for writing");
        write_fit_kv(fit, label, f);
    }
    const auto table = out + ".coef.csv";
    std::ofstream t(table);
    if (!t) throw IoError(table, "cannot open for writing");
    write_fit_table(fit, t);
    std::cout << fmt::format("{}: N={} clusters={} LLF={:.2f}; wrote {} and {}\n", label, fit.n, fit.clusters,
                             fit.llf, out, table);
    return 0;
}

int cmd_analyze(const LogOptions& lo, const std::string& cells_spec, const std::string& out,
                const std::string& rounds, const std::vector<std::string>& compare) {
    const auto cells = make_cells(cells_spec, load_logs(lo));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& c : compare) {
        const auto colon = c.find(':');
        if (colon == std::string::npos) throw DomainError("--compare expects a:b, got " + c);
        pairs.emplace_back(c.substr(0, colon), c.substr(colon + 1));
    }
    auto report = build_report(cells, pairs, parse_round_range(rounds));
    render_report(report, out);
    for (const auto& c : report.cells)
        std::cout << fmt::format("{}: {} logs{}\n", c.label, c.sources.size(),
                                 c.fit ? "" : " (fit failed: " + c.fit_error + ")");
    std::cout << "wrote tables to " << out << '\n';
    return 0;
}

int cmd_serve(const std::string& config, std::uint16_t port, const std::string& out, const std::string& op_token,
              int linger_ms) {
    std::ifstream in(config);
    if (!in) throw IoError(config, "cannot open");
    const auto j = nlohmann::json::parse(in, nullptr, true, true);
    const auto session_id = j.value("session_id", std::string("live"));
    const auto cfg = config_from_json(j.value("config", nlohmann::json::object()));
    fs::create_directories(out);
    const auto snapshot = (fs::path(out) / (session_id + ".snapshot")).string();

    server::SessionState state;
    if (fs::exists(snapshot)) {
        try {
            state = server::load_snapshot(snapshot);
        } catch (const server::SnapshotCorrupt& e) {
            std::cerr << "refusing to resume: " << e.what() << '\n';
            if (e.last_valid_round)
                std::cerr << "last valid snapshot (" << snapshot << ".prev) completed round " << *e.last_valid_round
                          << '\n';
            else
                std::cerr << "no valid earlier snapshot\n";
            return 3;
        }
        if (state.session_id != session_id || state.config != cfg) {
            std::cerr << "snapshot " << snapshot << " belongs to a different session configuration\n";
            return 3;
        }
        std::cout << fmt::format("resuming {} at {} round {}\n", session_id, server::to_string(state.phase),
                                 state.round);
    } else {
        std::vector<std::string> tokens;
        if (j.contains("tokens")) {
            tokens = j["tokens"].get<std::vector<std::string>>();
        } else {
            for (int i = 0; i < cfg.session_size(); ++i) tokens.push_back(random_token());
            const auto tpath = fs::path(out) / (session_id + ".tokens.txt");
            std::ofstream t(tpath);
            for (const auto& tok : tokens) t << tok << '\n';
            std::cout << "join tokens written to " << tpath.string() << '\n';
        }
        const auto t = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        state = server::new_session(session_id, cfg, tokens, buf);
    }
    server::ServerOptions opts;
    opts.bind_address = server::bind_address_from_env();
    opts.port = port;
    opts.out_dir = out;
    opts.operator_token = op_token;
    opts.linger_ms = linger_ms;
    server::SessionServer srv(std::move(state), opts);
    std::cout << fmt::format("listening on {}:{}", opts.bind_address, srv.port()) << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    srv.run(g_stop);
    std::cout << fmt::format("session {} {}; log at {}", session_id, server::to_string(srv.state().phase),
                             srv.log_path())
              << std::endl;
    return 0;
}

int cmd_validate(const LogOptions& lo) {
    int bad = 0;
    SessionConfig base;
    base.endowment = lo.endowment;
    base.treatment = parse_treatment(lo.treatment);
    base.multiplier = lo.multiplier;
    for (const auto& p : lo.patterns)
        for (const auto& path : expand_glob(p)) {
            if (fs::path(path).filename() == "summary.csv") continue;
            try {
                const auto log = load_log(path, base);
                validate_log(log);
                std::cout << "ok      " << path << " (" << log.completed_rounds() << " rounds)\n";
            } catch (const std::exception& e) {
                ++bad;
                std::cout << "invalid " << path << ": " << e.what() << '\n';
            }
        }
    return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voluntary contribution mechanism experiments: simulate, serve, estimate, analyze"};
    app.require_subcommand(1);

    std::string config, out, rounds = "..", label, cells = "treatment", op_token;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    bool serial = false;
    std::uint16_t port = 8080;
    int linger_ms = 30000;
    std::vector<std::string> compare;
    LogOptions lo;

    auto* sim = app.add_subcommand("simulate", "Run simulated sessions from a run configuration");
    sim->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "Output directory")->required();
    sim->add_option("--seed", seed, "Override the master seed");
    sim->add_option("--replications", reps, "Override the number of sessions");
    sim->add_flag("--serial", serial, "Use the single-threaded reference path");

    auto* est = app.add_subcommand("estimate", "Fit the double-censored Tobit model to pooled logs");
    add_log_options(est, lo);
    est->add_option("--cell", label, "Cell label")->required();
    est->add_option("--out", out, "Key-value output file; the coefficient table goes to <out>.coef.csv")->required();
    est->add_option("--rounds", rounds, "Round filter a..b");

    auto* ana = app.add_subcommand("analyze", "Means, reciprocity, fits and comparisons per cell");
    add_log_options(ana, lo);
    ana->add_option("--cells", cells, "treatment | prefix | file | label=glob,label=glob");
    ana->add_option("--out", out, "Output directory")->required();
    ana->add_option("--rounds", rounds, "Round filter a..b");
    ana->add_option("--compare", compare, "Cell pair a:b for coefficient comparisons (repeatable)");

    auto* srv = app.add_subcommand("serve", "Run a live session server (bind address from VCM_BIND_ADDRESS)");
    srv->add_option("--config", config, "Session configuration (JSON)")->required()->check(CLI::ExistingFile);
    srv->add_option("--port", port, "TCP port (0 picks a free one)");
    srv->add_option("--out", out, "Directory for snapshots and the final log")->required();
    srv->add_option("--operator-token", op_token, "Require this X-Operator-Token on operator requests");
    srv->add_option("--linger-ms", linger_ms, "How long to keep serving after the session ends");

    auto* val = app.add_subcommand("validate", "Check logs against the log invariants");
    add_log_options(val, lo);

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(config, out, seed, reps, serial);
        if (est->parsed()) return cmd_estimate(lo, label, out, rounds);
        if (ana->parsed()) return cmd_analyze(lo, cells, out, rounds, compare);
        if (srv->parsed()) return cmd_serve(config, port, out, op_token, linger_ms);
        if (val->parsed()) return cmd_validate(lo);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
