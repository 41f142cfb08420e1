#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "condbm/binning.hpp"
#include "condbm/extrema.hpp"
#include "condbm/interpolate.hpp"
#include "condbm/mc_kernels.hpp"
#include "condbm/monte_carlo.hpp"
#include "condbm/ohlc.hpp"
#include "condbm/verification.hpp"
#include "condbm/volatility.hpp"

using namespace condbm;

namespace {

enum Exit { Ok = 0, Usage = 1, Data = 2, VerifyFail = 3 };

std::string emit_mode = "csv";

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output: " + path);
    out << text;
    if (!out) throw DataError("failed writing output: " + path);
}

std::vector<std::vector<double>> read_numeric_rows(const std::string& path, std::vector<std::string>* ids) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<double> row;
        bool first = true;
        bool header = false;
        while (std::getline(ss, field, ',')) {
            if (first && ids) {
                ids->push_back(field);
                first = false;
                continue;
            }
            first = false;
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0') {
                if (rows.empty() && row.empty()) {
                    header = true;
                    break;
                }
                throw DataError(path + ": bad number '" + field + "' on line " + std::to_string(n), n);
            }
            row.push_back(v);
        }
        if (header) {
            if (ids) ids->pop_back();
            continue;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int report_error(const std::exception& e) {
    int code = Data;
    std::string type = "error";
    std::size_t line = 0;
    if (const auto* d = dynamic_cast<const DataError*>(&e)) {
        type = "data";
        line = d->line();
    } else if (dynamic_cast<const DomainError*>(&e)) {
        type = "usage";
        code = Usage;
    } else if (dynamic_cast<const CapacityError*>(&e)) {
        type = "capacity";
    } else if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const TruncationError*>(&e)) {
        type = "numeric";
        code = VerifyFail;
    }
    if (emit_mode == "json") {
        nlohmann::json j;
        j["error"] = {{"type", type}, {"message", e.what()}, {"exit_code", code}};
        if (line) j["error"]["line"] = line;
        std::cout << j.dump() << "\n";
    } else {
        std::cerr << "error: " << e.what() << "\n";
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional Brownian motion given open/high/low/close statistics"};
    app.require_subcommand(1);

    // interpolate
    std::string input, format_text, method = "chl", sigma = "gk", voltime_path, output, truth_path;
    int grid = 100;
    bool strict = false, serial_bars = false;
    std::optional<double> sigma_value;
    auto* interp = app.add_subcommand("interpolate", "Conditional mean/variance curves for OHLC bars");
    interp->add_option("--input", input, "CSV with OHLC columns")->required();
    interp->add_option("--format", format_text, "Column map: delim=,header=1,id=date,open=open,...,prior_open=0");
    interp->add_option("--method", method, "bridge | ch | chl")->check(CLI::IsMember({"bridge", "ch", "chl"}));
    interp->add_option("--sigma", sigma, "const | gk | ml")->check(CLI::IsMember({"const", "gk", "ml"}));
    interp->add_option("--sigma-value", sigma_value, "Known sigma^2, overrides --sigma");
    interp->add_option("--grid", grid, "Number of intervals of the output time grid")->check(CLI::PositiveNumber);
    interp->add_option("--voltime", voltime_path, "Two-column (t, tau) volatility-time map");
    interp->add_option("--truth", truth_path, "Rows bar_id,x_0..x_grid of true log prices; adds a score block");
    interp->add_option("--output", output, "Output file (default stdout)");
    interp->add_option("--emit", emit_mode, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    interp->add_flag("--strict", strict, "Reject OHLC ordering violations instead of clamping");
    interp->add_flag("--serial", serial_bars, "Process bars on one thread");

    // simulate
    std::int64_t paths = 100000;
    int steps = 1530, bins = 40, stride = 10;
    std::uint64_t seed = 1;
    double alpha = 0.7;
    std::int64_t kappa = 50;
    std::string condition = "close", grid_kind = "uniform", extremes = "discrete", dump_path;
    bool parallel = false, exclude_flagged = false, compare = false;
    auto* sim = app.add_subcommand("simulate", "Binned empirical conditional curves (ensemble variance report)");
    sim->add_option("--paths", paths)->check(CLI::PositiveNumber);
    sim->add_option("--steps", steps)->check(CLI::Range(2, 1 << 28));
    sim->add_option("--seed", seed);
    sim->add_option("--bins", bins, "Bins per dimension")->check(CLI::Range(2, 100000));
    sim->add_option("--alpha", alpha, "Density power in (0, 1]")->check(CLI::Range(1e-6, 1.0));
    sim->add_option("--kappa", kappa, "Occupancy below which bins are flagged");
    sim->add_option("--condition", condition, "close | high | ch | hl | chl")
        ->check(CLI::IsMember({"close", "high", "ch", "hl", "chl"}));
    sim->add_option("--stride", stride, "Record every n-th grid point")->check(CLI::PositiveNumber);
    sim->add_option("--grid", grid_kind, "uniform | cosine")->check(CLI::IsMember({"uniform", "cosine"}));
    sim->add_option("--extremes", extremes, "discrete | bridge")->check(CLI::IsMember({"discrete", "bridge"}));
    sim->add_option("--dump", dump_path, "Write a binary dump of per-path summaries");
    sim->add_option("--output", output, "Report CSV (default stdout)");
    sim->add_flag("--parallel", parallel, "OpenMP path generation");
    sim->add_flag("--exclude-flagged", exclude_flagged, "Drop under-occupied bins from the ensemble average");
    sim->add_flag("--compare", compare, "Print per-bin MSE against the closed forms (worst bins first) to stderr");
    sim->add_option("--emit", emit_mode, "csv | json (errors only)")->check(CLI::IsMember({"csv", "json"}));

    // verify
    std::string level = "quick";
    double mc_scale = 1.0;
    auto* ver = app.add_subcommand("verify", "Analytic and Monte Carlo self-checks");
    ver->add_option("--level", level, "quick | full")->check(CLI::IsMember({"quick", "full"}));
    ver->add_option("--seed", seed);
    ver->add_option("--mc-scale", mc_scale, "Scale Monte Carlo sizes")->check(CLI::PositiveNumber);
    std::vector<int> only;
    ver->add_option("--only", only, "Run only these check ids");
    ver->add_flag("--parallel", parallel);
    ver->add_option("--emit", emit_mode, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    // feller
    double xmin = 0.005, xmax = 4.0, tolerance = 1e-10;
    int points = 100, max_terms = 5000;
    std::int64_t feller_paths = 0;
    int feller_steps = 2000;
    auto* fel = app.add_subcommand("feller", "Range density table with optional empirical overlay");
    fel->add_option("--xmin", xmin)->check(CLI::PositiveNumber);
    fel->add_option("--xmax", xmax)->check(CLI::PositiveNumber);
    fel->add_option("--points", points)->check(CLI::Range(2, 10000000));
    fel->add_option("--tolerance", tolerance)->check(CLI::PositiveNumber);
    fel->add_option("--max-terms", max_terms)->check(CLI::PositiveNumber);
    fel->add_option("--paths", feller_paths, "Simulated paths for the empirical column");
    fel->add_option("--steps", feller_steps)->check(CLI::Range(2, 1 << 28));
    fel->add_option("--seed", seed);
    fel->add_flag("--parallel", parallel);
    fel->add_option("--output", output);
    fel->add_option("--emit", emit_mode, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    // table2
    Table2Config t2;
    auto* tab = app.add_subcommand("table2", "Time-averaged ensemble variances by conditioning set");
    tab->add_option("--paths", t2.n_paths)->check(CLI::PositiveNumber);
    tab->add_option("--steps", t2.n_steps)->check(CLI::Range(2, 1 << 28));
    tab->add_option("--bins", t2.nbins, "Bins per dimension for multi-statistic rows")->check(CLI::Range(2, 100000));
    tab->add_option("--bins-1d", t2.nbins_1d, "Bins for single-statistic rows")->check(CLI::Range(2, 10000000));
    tab->add_option("--alpha", t2.alpha)->check(CLI::Range(1e-6, 1.0));
    tab->add_option("--stride", t2.record_stride)->check(CLI::PositiveNumber);
    tab->add_option("--seed", t2.seed);
    tab->add_flag("--serial", serial_bars, "Single-threaded generation");
    tab->add_option("--output", output);
    tab->add_option("--emit", emit_mode, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*interp) {
            const FormatSpec fmt = FormatSpec::parse(format_text);
            const IngestResult in = ingest(input, fmt, strict ? ValidationMode::Strict : ValidationMode::Lenient);
            for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
            InterpolationConfig cfg;
            cfg.method = parse_interp_method(method);
            cfg.sigma = parse_vol_method(sigma);
            cfg.known_sigma_sq = sigma_value;
            cfg.grid = grid;
            cfg.parallel = !serial_bars;
            if (!voltime_path.empty()) {
                const auto rows = read_numeric_rows(voltime_path, nullptr);
                std::vector<double> t, tau;
                for (const auto& r : rows) {
                    if (r.size() != 2) throw DataError(voltime_path + ": expected two columns");
                    t.push_back(r[0]);
                    tau.push_back(r[1]);
                }
                cfg.voltime = vol_time_from_pairs(t, tau);
                cfg.voltime_t = t;
            }
            const InterpolationResult res = interpolate(in.bars, cfg);
            for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
            std::string text = emit_mode == "json" ? emit_curves_json(res, cfg) : emit_curves_csv(res, cfg);
            if (!truth_path.empty()) {
                std::vector<std::string> ids;
                const auto rows = read_numeric_rows(truth_path, &ids);
                ScoreAccumulator acc;
                std::size_t matched = 0;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto it = std::find_if(res.bars.begin(), res.bars.end(),
                                                 [&](const BarCurve& b) { return b.id == ids[i]; });
                    if (it == res.bars.end() || !it->error.empty()) continue;
                    if (rows[i].size() != it->mean.size())
                        throw DataError(truth_path + ": row for bar " + ids[i] + " does not match the grid");
                    // weights: increments of tau, i.e. the per-slot variance share
                    std::vector<double> w(it->tau.size(), 0.0);
                    for (std::size_t k = 1; k < w.size(); ++k) w[k] = it->tau[k] - it->tau[k - 1];
                    acc.add_day(rows[i], it->mean, w);
                    ++matched;
                }
                const Scores s = acc.result();
                char buf[256];
                if (emit_mode == "json") {
                    nlohmann::json j = nlohmann::json::parse(text);
                    j["score"] = {{"days", matched}, {"mse", s.mse}, {"rmse", s.rmse}, {"mrse", s.mrse}};
                    text = j.dump(1);
                } else {
                    std::snprintf(buf, sizeof buf, "# score days=%zu mse=%.12g rmse=%.12g mrse=%.12g\n", matched, s.mse,
                                  s.rmse, s.mrse);
                    std::cerr << buf;
                }
            }
            write_output(output, text);
            return res.failures() == 0 ? Ok : Data;
        }

        if (*sim) {
            ExperimentConfig cfg;
            cfg.sim.n_paths = paths;
            cfg.sim.n_steps = steps;
            cfg.sim.seed = seed;
            cfg.sim.record_stride = stride;
            cfg.sim.parallel = parallel;
            cfg.sim.grid = grid_kind == "cosine" ? TimeGridKind::Cosine : TimeGridKind::Uniform;
            cfg.sim.extremes = extremes == "bridge" ? ExtremeMode::BridgeSampled : ExtremeMode::Discrete;
            cfg.condition = parse_condition(condition);
            cfg.nbins = bins;
            cfg.alpha = alpha;
            cfg.kappa = kappa;
            cfg.exclude_flagged = exclude_flagged;
            const ExperimentResult res = run_conditioned_experiment(cfg);
            write_output(output, report_csv(res.grid, res.report));
            if (!dump_path.empty()) {
                SimulationConfig sc = cfg.sim;
                PathEnsemble ens = generate_paths(sc);
                write_summary_dump(dump_path, ens);
            }
            std::fprintf(stderr, "time-averaged ensemble variance (%s): %.6f over %zu bins\n", condition.c_str(),
                         res.report.time_average, res.report.n_bins());
            if (compare) {
                const auto errs = compare_to_analytic(res.report, res.grid, cfg.condition, ModelParams{1.0});
                std::fprintf(stderr, "bin,count,mse_mean,mse_variance\n");
                for (const BinError& e : worst_quantile(errs, 0.05))
                    std::fprintf(stderr, "%zu,%lld,%.6g,%.6g\n", e.bin, static_cast<long long>(res.report.counts[e.bin]),
                                 e.mse_mean, e.mse_variance);
            }
            return Ok;
        }

        if (*ver) {
            verify::Options opt;
            opt.seed = ver->count("--seed") ? seed : opt.seed;
            opt.parallel = parallel;
            opt.mc_scale = mc_scale;
            auto entries = verify::suite(level == "full" || !only.empty() ? verify::Level::Full : verify::Level::Quick);
            if (!only.empty())
                std::erase_if(entries, [&](const verify::Entry& e) { return std::find(only.begin(), only.end(), e.id) == only.end(); });
            nlohmann::json j = nlohmann::json::array();
            const auto results = verify::run(entries, opt, [&](const verify::CheckResult& r) {
                if (emit_mode == "json") {
                    j.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                                 {"seconds", r.seconds}});
                } else {
                    std::printf("[%s] %2d %s: %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                                r.detail.c_str(), r.seconds);
                    std::fflush(stdout);
                }
            });
            if (emit_mode == "json") std::cout << j.dump(1) << "\n";
            const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
            return ok ? Ok : VerifyFail;
        }

        if (*fel) {
            if (!(xmax > xmin)) throw DomainError("feller: xmax must exceed xmin");
            const SeriesControl ctrl{max_terms, tolerance};
            std::vector<double> empirical;
            const double dx = (xmax - xmin) / (points - 1);
            if (feller_paths > 0) {
                SimulationConfig sc;
                sc.n_paths = feller_paths;
                sc.n_steps = feller_steps;
                sc.seed = seed;
                sc.record_stride = feller_steps;
                sc.parallel = parallel;
                const PathEnsemble ens = generate_paths(sc);
                empirical.assign(points, 0.0);
                for (const PathSummary& s : ens.summary) {
                    const double k = std::round((s.high - s.low - xmin) / dx);
                    if (k >= 0 && k < points) empirical[static_cast<std::size_t>(k)] += 1.0;
                }
                for (double& e : empirical) e /= static_cast<double>(feller_paths) * dx;
            }
            nlohmann::json j = nlohmann::json::array();
            std::string text = empirical.empty() ? "x,density,terms,dual\n" : "x,density,terms,dual,empirical\n";
            char buf[160];
            for (int i = 0; i < points; ++i) {
                const double x = xmin + i * dx;
                double dens = NAN;
                int terms = 0;
                std::string note;
                try {
                    const SeriesValue v = feller_range_density(x, ctrl);
                    dens = v.value;
                    terms = v.terms;
                } catch (const TruncationError& e) {
                    terms = e.terms_used();
                    note = e.what();
                }
                const double dual = feller_range_density_dual(x);
                if (emit_mode == "json") {
                    nlohmann::json row{{"x", x}, {"terms", terms}, {"dual", dual}};
                    row["density"] = std::isfinite(dens) ? nlohmann::json(dens) : nlohmann::json(nullptr);
                    if (!note.empty()) row["error"] = note;
                    if (!empirical.empty()) row["empirical"] = empirical[i];
                    j.push_back(row);
                } else {
                    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%d,%.12g", x, dens, terms, dual);
                    text += buf;
                    if (!empirical.empty()) {
                        std::snprintf(buf, sizeof buf, ",%.12g", empirical[i]);
                        text += buf;
                    }
                    text += "\n";
                }
            }
            write_output(output, emit_mode == "json" ? j.dump(1) + "\n" : text);
            return Ok;
        }

        if (*tab) {
            t2.parallel = !serial_bars;
            const auto rows = run_table2(t2);
            std::string text = "conditioning,time_avg_variance,target,tolerance,status\n";
            nlohmann::json j = nlohmann::json::array();
            char buf[200];
            for (const Table2Row& r : rows) {
                std::snprintf(buf, sizeof buf, "\"%s\",%.6f,%.6f,%.4f,%s\n", r.name.c_str(), r.value, r.target,
                              r.tolerance, r.pass() ? "PASS" : "FAIL");
                text += buf;
                j.push_back({{"conditioning", r.name}, {"value", r.value}, {"target", r.target},
                             {"tolerance", r.tolerance}, {"pass", r.pass()}});
            }
            write_output(output, emit_mode == "json" ? j.dump(1) + "\n" : text);
            return Ok;
        }
    } catch (const std::exception& e) {
        return report_error(e);
    }
    return Usage;
}
