#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condbm/monte_carlo.hpp"
#include "condbm/types.hpp"

// Adaptive nested binning of path summaries and the empirical conditional
// curves built from it.
namespace condbm {

enum class Statistic { Close, High, Low };

double statistic_of(const PathSummary& s, Statistic which);

// Bins are numbered in nested order: with dims (a, b, c) the flat index is
// (ia * nb + ib) * nc + ic, so coarsening by nc merges the c-children.
struct BinGrid {
    std::vector<Statistic> dims;
    std::vector<int> nbins;
    double alpha = 0.7;
    std::int64_t kappa = 50;
    std::vector<std::int32_t> assignment;  // per path
    std::vector<std::int64_t> counts;  // per bin
    std::vector<std::vector<double>> stat_means;  // per bin, one entry per dim
    std::vector<bool> flagged;  // count < kappa
    // Per-dimension boundaries, one list per parent bin of that dimension
    // (nbins[d] + 1 values, outer entries are the sample extremes).
    std::vector<std::vector<std::vector<double>>> boundaries;

    std::size_t n_bins() const { return counts.size(); }
};

// Cut points (as sizes) splitting `sorted` into nbins groups of roughly equal
// integral of n(q)^alpha. alpha = 1 gives counts equal within one.
std::vector<std::size_t> density_power_cuts(const std::vector<double>& sorted, int nbins, double alpha);

BinGrid build_bins(std::span<const PathSummary> summary, const std::vector<Statistic>& dims,
                   const std::vector<int>& nbins, double alpha = 0.7, std::int64_t kappa = 50);

struct EnsembleVarianceReport {
    std::vector<double> time;
    std::vector<std::int64_t> counts;
    std::vector<double> mean;  // bins x times
    std::vector<double> variance;  // bins x times, unbiased per bin
    std::vector<bool> flagged;
    std::vector<double> ensemble_variance;  // count-weighted over bins
    double time_average = 0.0;

    std::size_t n_bins() const { return counts.size(); }
    std::size_t n_times() const { return time.size(); }
    double mean_at(std::size_t bin, std::size_t i) const { return mean[bin * n_times() + i]; }
    double variance_at(std::size_t bin, std::size_t i) const { return variance[bin * n_times() + i]; }
};

// Bins with fewer than two paths get zero curves and weight zero. Flagged bins
// are included unless exclude_flagged is set.
EnsembleVarianceReport empirical_curves(const BinAccumulator& acc, std::span<const double> time,
                                        const std::vector<bool>& flagged = {}, bool exclude_flagged = false);

enum class Condition { Close, High, CloseHigh, HighLow, CloseHighLow };

Condition parse_condition(const std::string& name);
std::string condition_name(Condition c);
// Statistic selectors used for each conditioning set, outermost first.
std::vector<Statistic> condition_dims(Condition c);

// Analytic curve for one bin evaluated at its mean statistics.
ConditionalCurve analytic_curve(Condition condition, std::span<const double> stat_mean,
                                const ModelParams& params, std::span<const double> time);

struct BinError {
    std::size_t bin = 0;
    double mse_mean = 0.0;
    double mse_variance = 0.0;
};

// Per-bin MSE of the empirical against the analytic curves, sorted worst
// (largest mean MSE) first. Bins whose analytic curve throws are skipped.
std::vector<BinError> compare_to_analytic(const EnsembleVarianceReport& report, const BinGrid& grid,
                                          Condition condition, const ModelParams& params);
// Leading fraction q of a sorted error table (at least one entry).
std::vector<BinError> worst_quantile(const std::vector<BinError>& sorted, double q);

struct ExperimentConfig {
    SimulationConfig sim;
    Condition condition = Condition::Close;
    int nbins = 40;  // per dimension
    double alpha = 0.7;
    std::int64_t kappa = 50;
    bool exclude_flagged = false;
};

struct ExperimentResult {
    BinGrid grid;
    EnsembleVarianceReport report;
};

ExperimentResult run_conditioned_experiment(const ExperimentConfig& config);

struct Table2Row {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass() const { return std::abs(value - target) <= tolerance; }
};

struct Table2Config {
    std::int64_t n_paths = 2'000'000;
    int n_steps = 1530;
    int nbins = 40;  // per dimension for the multi-statistic rows
    int nbins_1d = 320;  // single-statistic rows
    double alpha = 0.7;
    int record_stride = 10;
    std::uint64_t seed = 20261016;
    bool parallel = true;
};

std::vector<Table2Row> run_table2(const Table2Config& config);

// CSV with one row per (bin, time): bin, count, flagged, stat means, t, mean, variance.
void write_report_csv(const std::string& path, const BinGrid& grid, const EnsembleVarianceReport& report);
std::string report_csv(const BinGrid& grid, const EnsembleVarianceReport& report);

}  // namespace condbm
