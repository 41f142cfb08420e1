#include "condbm/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "condbm/close_high.hpp"
#include "condbm/high_low_close.hpp"

namespace condbm {

double statistic_of(const PathSummary& s, Statistic which) {
    switch (which) {
        case Statistic::Close: return s.close;
        case Statistic::High: return s.high;
        case Statistic::Low: return s.low;
    }
    return 0.0;
}

std::vector<std::size_t> density_power_cuts(const std::vector<double>& sorted, int nbins, double alpha) {
    const std::size_t n = sorted.size();
    if (nbins < 1) throw DomainError("density_power_cuts: nbins must be >= 1");
    if (n < static_cast<std::size_t>(nbins)) throw DomainError("density_power_cuts: fewer samples than bins");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("density_power_cuts: alpha must lie in (0, 1]");

    // Sample weight n(q)^(alpha - 1), with n(q) estimated on blocks of ~sqrt(n)
    // consecutive order statistics.
    std::vector<double> cum(n + 1, 0.0);
    if (alpha == 1.0) {
        for (std::size_t i = 0; i < n; ++i) cum[i + 1] = static_cast<double>(i + 1);
    } else {
        const std::size_t m = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(double(n))));
        const double spread = sorted.back() - sorted.front();
        const double floor_width = spread > 0.0 ? 1e-9 * spread : 1.0;
        for (std::size_t start = 0; start < n; start += m) {
            std::size_t end = std::min(n, start + m);
            if (n - end < m / 2) end = n;  // fold a short tail into the last block
            const double width = std::max(sorted[end - 1] - sorted[start], floor_width);
            const double density = static_cast<double>(end - start) / width;
            const double w = std::pow(density, alpha - 1.0);
            for (std::size_t i = start; i < end; ++i) cum[i + 1] = cum[i] + w;
            start = end - m;
            if (end == n) break;
        }
    }

    std::vector<std::size_t> cuts(nbins + 1);
    cuts[0] = 0;
    cuts[nbins] = n;
    const double total = cum[n];
    for (int k = 1; k < nbins; ++k) {
        const double target = total * k / nbins;
        std::size_t s = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
        if (s > 0 && target - cum[s - 1] < cum[s] - target) --s;
        const std::size_t lo = cuts[k - 1] + 1;
        const std::size_t hi = n - static_cast<std::size_t>(nbins - k);
        cuts[k] = std::clamp(s, lo, hi);
    }
    return cuts;
}

BinGrid build_bins(std::span<const PathSummary> summary, const std::vector<Statistic>& dims,
                   const std::vector<int>& nbins, double alpha, std::int64_t kappa) {
    if (dims.empty() || dims.size() > 3 || dims.size() != nbins.size())
        throw DomainError("build_bins: need 1 to 3 dimensions with one bin count each");
    for (int nb : nbins)
        if (nb < 2) throw DomainError("build_bins: nbins must be >= 2");
    if (summary.empty()) throw DomainError("build_bins: empty ensemble");

    BinGrid grid;
    grid.dims = dims;
    grid.nbins = nbins;
    grid.alpha = alpha;
    grid.kappa = kappa;
    grid.boundaries.resize(dims.size());

    std::vector<std::vector<std::int32_t>> groups(1);
    groups[0].resize(summary.size());
    std::iota(groups[0].begin(), groups[0].end(), 0);

    std::vector<double> values;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        std::vector<std::vector<std::int32_t>> next;
        next.reserve(groups.size() * nbins[d]);
        for (auto& g : groups) {
            auto key = [&](std::int32_t p) { return statistic_of(summary[p], dims[d]); };
            std::stable_sort(g.begin(), g.end(), [&](std::int32_t a, std::int32_t b) { return key(a) < key(b); });
            values.resize(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) values[i] = key(g[i]);
            const std::vector<std::size_t> cuts = density_power_cuts(values, nbins[d], alpha);
            std::vector<double> bounds(nbins[d] + 1);
            bounds.front() = values.front();
            bounds.back() = values.back();
            for (int k = 1; k < nbins[d]; ++k) bounds[k] = 0.5 * (values[cuts[k] - 1] + values[cuts[k]]);
            grid.boundaries[d].push_back(std::move(bounds));
            for (int k = 0; k < nbins[d]; ++k)
                next.emplace_back(g.begin() + static_cast<std::ptrdiff_t>(cuts[k]),
                                  g.begin() + static_cast<std::ptrdiff_t>(cuts[k + 1]));
        }
        groups = std::move(next);
    }

    grid.assignment.assign(summary.size(), -1);
    grid.counts.resize(groups.size());
    grid.stat_means.resize(groups.size());
    grid.flagged.resize(groups.size());
    for (std::size_t b = 0; b < groups.size(); ++b) {
        std::vector<double> means(dims.size(), 0.0);
        for (std::int32_t p : groups[b]) {
            grid.assignment[p] = static_cast<std::int32_t>(b);
            for (std::size_t d = 0; d < dims.size(); ++d) means[d] += statistic_of(summary[p], dims[d]);
        }
        const auto n = static_cast<std::int64_t>(groups[b].size());
        for (double& m : means) m /= static_cast<double>(n);
        grid.counts[b] = n;
        grid.stat_means[b] = std::move(means);
        grid.flagged[b] = n < kappa;
    }
    return grid;
}

EnsembleVarianceReport empirical_curves(const BinAccumulator& acc, std::span<const double> time,
                                        const std::vector<bool>& flagged, bool exclude_flagged) {
    if (time.size() != acc.n_times) throw DomainError("empirical_curves: time grid does not match accumulator");
    EnsembleVarianceReport r;
    r.time.assign(time.begin(), time.end());
    r.counts = acc.count;
    r.flagged.assign(acc.n_bins, false);
    if (!flagged.empty()) {
        if (flagged.size() != acc.n_bins) throw DomainError("empirical_curves: flag count does not match bins");
        r.flagged = flagged;
    }
    const std::size_t nt = acc.n_times;
    r.mean.assign(acc.n_bins * nt, 0.0);
    r.variance.assign(acc.n_bins * nt, 0.0);
    r.ensemble_variance.assign(nt, 0.0);
    double weight = 0.0;
    for (std::size_t b = 0; b < acc.n_bins; ++b) {
        const auto n = acc.count[b];
        if (n < 2) continue;
        const double dn = static_cast<double>(n);
        const bool use = !(exclude_flagged && r.flagged[b]);
        if (use) weight += dn;
        for (std::size_t i = 0; i < nt; ++i) {
            const double mu = acc.sum[b * nt + i] / dn;
            const double var = std::max(0.0, (acc.sum_sq[b * nt + i] - dn * mu * mu) / (dn - 1.0));
            r.mean[b * nt + i] = mu;
            r.variance[b * nt + i] = var;
            if (use) r.ensemble_variance[i] += dn * var;
        }
    }
    if (weight > 0.0)
        for (double& v : r.ensemble_variance) v /= weight;
    r.time_average = time_average(r.time, r.ensemble_variance);
    return r;
}

Condition parse_condition(const std::string& name) {
    if (name == "close") return Condition::Close;
    if (name == "high") return Condition::High;
    if (name == "ch") return Condition::CloseHigh;
    if (name == "hl") return Condition::HighLow;
    if (name == "chl") return Condition::CloseHighLow;
    throw DomainError("unknown condition: " + name);
}

std::string condition_name(Condition c) {
    switch (c) {
        case Condition::Close: return "close";
        case Condition::High: return "high";
        case Condition::CloseHigh: return "ch";
        case Condition::HighLow: return "hl";
        case Condition::CloseHighLow: return "chl";
    }
    return "";
}

std::vector<Statistic> condition_dims(Condition c) {
    switch (c) {
        case Condition::Close: return {Statistic::Close};
        case Condition::High: return {Statistic::High};
        case Condition::CloseHigh: return {Statistic::Close, Statistic::High};
        case Condition::HighLow: return {Statistic::High, Statistic::Low};
        case Condition::CloseHighLow: return {Statistic::Close, Statistic::High, Statistic::Low};
    }
    return {};
}

ConditionalCurve analytic_curve(Condition condition, std::span<const double> q, const ModelParams& params,
                                std::span<const double> time) {
    switch (condition) {
        case Condition::Close: {
            ConditionalCurve c;
            for (double t : time) {
                c.time.push_back(t);
                c.mean.push_back(q[0] * t);
                c.variance.push_back(params.bridge_variance(t));
            }
            return c;
        }
        case Condition::High: return conditional_curve_given_high(q[0], params, time);
        case Condition::CloseHigh: return conditional_curve_ch(HighCloseStat{q[1], q[0]}, params, time);
        case Condition::HighLow: return conditional_curve_hl(q[0], q[1], params, time);
        case Condition::CloseHighLow:
            return conditional_curve_chl(HighLowCloseStat{q[1], q[2], q[0]}, params, time);
    }
    throw DomainError("analytic_curve: unknown condition");
}

std::vector<BinError> compare_to_analytic(const EnsembleVarianceReport& report, const BinGrid& grid,
                                          Condition condition, const ModelParams& params) {
    std::vector<BinError> out;
    const std::size_t nt = report.n_times();
    for (std::size_t b = 0; b < report.n_bins(); ++b) {
        if (report.counts[b] < 2) continue;
        ConditionalCurve a;
        try {
            a = analytic_curve(condition, grid.stat_means[b], params, report.time);
        } catch (const Error&) {
            continue;
        }
        BinError e;
        e.bin = b;
        for (std::size_t i = 0; i < nt; ++i) {
            const double dm = report.mean_at(b, i) - a.mean[i];
            const double dv = report.variance_at(b, i) - a.variance[i];
            e.mse_mean += dm * dm;
            e.mse_variance += dv * dv;
        }
        e.mse_mean /= static_cast<double>(nt);
        e.mse_variance /= static_cast<double>(nt);
        out.push_back(e);
    }
    std::stable_sort(out.begin(), out.end(), [](const BinError& x, const BinError& y) { return x.mse_mean > y.mse_mean; });
    return out;
}

std::vector<BinError> worst_quantile(const std::vector<BinError>& sorted, double q) {
    if (sorted.empty()) return {};
    const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(q * sorted.size())), 1, sorted.size());
    return {sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n)};
}

ExperimentResult run_conditioned_experiment(const ExperimentConfig& config) {
    SimulationConfig sim = config.sim;
    sim.store_values = false;
    const PathEnsemble ens = generate_paths(sim);
    const std::vector<Statistic> dims = condition_dims(config.condition);
    ExperimentResult res;
    res.grid = build_bins(ens.summary, dims, std::vector<int>(dims.size(), config.nbins), config.alpha, config.kappa);
    BinAccumulator acc(res.grid.n_bins(), ens.n_record());
    const std::span<const std::int32_t> assign(res.grid.assignment);
    accumulate_bins(ens, std::span(&assign, 1), std::span(&acc, 1));
    res.report = empirical_curves(acc, ens.record_time, res.grid.flagged, config.exclude_flagged);
    return res;
}

std::vector<Table2Row> run_table2(const Table2Config& config) {
    SimulationConfig sim;
    sim.n_paths = config.n_paths;
    sim.n_steps = config.n_steps;
    sim.seed = config.seed;
    sim.record_stride = config.record_stride;
    sim.parallel = config.parallel;
    const PathEnsemble ens = generate_paths(sim);
    const int n = config.nbins;
    const int n1 = config.nbins_1d;

    // Nested close -> high -> low grid gives the (close, high) row by merging
    // its low children; (high, low) needs its own nesting order.
    const BinGrid chl = build_bins(ens.summary, {Statistic::Close, Statistic::High, Statistic::Low}, {n, n, n},
                                   config.alpha);
    const BinGrid hl = build_bins(ens.summary, {Statistic::High, Statistic::Low}, {n, n}, config.alpha);
    const BinGrid close = build_bins(ens.summary, {Statistic::Close}, {n1}, config.alpha);
    const BinGrid high = build_bins(ens.summary, {Statistic::High}, {n1}, config.alpha);

    const std::size_t nt = ens.n_record();
    std::vector<BinAccumulator> acc{BinAccumulator(chl.n_bins(), nt), BinAccumulator(hl.n_bins(), nt),
                                    BinAccumulator(close.n_bins(), nt), BinAccumulator(high.n_bins(), nt)};
    const std::vector<std::span<const std::int32_t>> assign{chl.assignment, hl.assignment, close.assignment,
                                                            high.assignment};
    accumulate_bins(ens, assign, acc);

    auto avg = [&](const BinAccumulator& a) { return empirical_curves(a, ens.record_time).time_average; };
    return {
        {"Close", avg(acc[2]), 1.0 / 6.0, 0.002},
        {"High", avg(acc[3]), 0.1602, 0.003},
        {"Close, High", avg(acc[0].coarsen(static_cast<std::size_t>(n))), 0.0990, 0.004},
        {"High, Low", avg(acc[1]), 0.0991, 0.004},
        {"Close, High, Low", avg(acc[0]), 0.0701, 0.004},
    };
}

std::string report_csv(const BinGrid& grid, const EnsembleVarianceReport& report) {
    std::string out = "bin,count,flagged";
    for (Statistic s : grid.dims)
        out += s == Statistic::Close ? ",close_mean" : s == Statistic::High ? ",high_mean" : ",low_mean";
    out += ",t,mean,variance\n";
    char buf[64];
    for (std::size_t b = 0; b < report.n_bins(); ++b) {
        std::string prefix = std::to_string(b) + "," + std::to_string(report.counts[b]) + "," +
                             (report.flagged[b] ? "1" : "0");
        for (double q : grid.stat_means[b]) {
            std::snprintf(buf, sizeof buf, ",%.12g", q);
            prefix += buf;
        }
        for (std::size_t i = 0; i < report.n_times(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%.12g\n", report.time[i], report.mean_at(b, i),
                          report.variance_at(b, i));
            out += prefix;
            out += buf;
        }
    }
    out += "# ensemble\nt,ensemble_variance\n";
    for (std::size_t i = 0; i < report.n_times(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", report.time[i], report.ensemble_variance[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "# time_average,%.12g\n", report.time_average);
    out += buf;
    return out;
}

void write_report_csv(const std::string& path, const BinGrid& grid, const EnsembleVarianceReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open report for writing: " + path);
    out << report_csv(grid, report);
    if (!out) throw DataError("failed writing report: " + path);
}

}  // namespace condbm
