#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbm/types.hpp"

// Brownian path ensembles on [0, 1] and their per-path summaries.
namespace condbm {

enum class TimeGridKind { Uniform, Cosine };

// How the high and low of each path are measured.
enum class ExtremeMode {
    Discrete,  // max/min over the grid points
    BridgeSampled  // exact draw of the max/min of the bridge inside each step
};

struct SimulationConfig {
    std::int64_t n_paths = 1000;
    int n_steps = 1000;
    double sigma = 1.0;
    std::uint64_t seed = 1;
    TimeGridKind grid = TimeGridKind::Uniform;
    ExtremeMode extremes = ExtremeMode::Discrete;
    std::optional<double> pin_close;  // pin every path to this close
    // Recorded time points: every record_stride-th grid point (t = 1 always
    // included), or the grid points nearest to record_times when non-empty.
    int record_stride = 1;
    std::vector<double> record_times;
    bool store_values = false;
    bool parallel = false;  // OpenMP kernels; results do not depend on thread count
    int chunk_size = 256;  // paths per parallel work item
    std::size_t memory_budget = std::size_t(2) << 30;

    void validate() const;
    // Stable 64-bit digest of every field that changes the output.
    std::uint64_t hash() const;
};

struct PathSummary {
    double close = 0.0;
    double high = 0.0;
    double low = 0.0;
    std::int32_t argmax = 0;  // grid index of the high (diagnostics only)
};

struct PathEnsemble {
    SimulationConfig config;
    std::vector<double> time;  // full grid, n_steps + 1 points
    std::vector<int> record_index;  // grid indices of recorded points
    std::vector<double> record_time;
    std::vector<PathSummary> summary;
    std::vector<double> values;  // n_paths x record_time.size(), row major; empty unless stored

    std::size_t n_paths() const { return summary.size(); }
    std::size_t n_record() const { return record_time.size(); }
    double value(std::size_t path, std::size_t rec) const { return values[path * n_record() + rec]; }
};

std::vector<double> make_time_grid(TimeGridKind kind, int n_steps);
std::vector<int> record_indices(const SimulationConfig& config, std::span<const double> grid);

// Simulates the ensemble. Throws CapacityError when the stored values would
// exceed config.memory_budget.
PathEnsemble generate_paths(const SimulationConfig& config);

// Paths from the truncated sine series
// B(t) = sigma [xi_0 t + sqrt(2) sum_{n=1}^{N} xi_n sin(n pi t) / (n pi)],
// sampled on a uniform grid of n_points intervals.
struct FourierConfig {
    std::int64_t n_paths = 1000;
    int n_modes = 64;
    int n_points = 256;
    double sigma = 1.0;
    std::uint64_t seed = 1;
    std::vector<double> record_times;  // stored values at these grid points
};
PathEnsemble fourier_paths(const FourierConfig& config);

// B(t) - (B(1) - c) t applied to stored values; requires the full grid to be
// recorded with discrete extremes so the summaries can be recomputed.
PathEnsemble pin_to_close(const PathEnsemble& ensemble, double close);

// Per-bin running sums of recorded values; bin-major layout.
struct BinAccumulator {
    std::size_t n_bins = 0;
    std::size_t n_times = 0;
    std::vector<std::int64_t> count;
    std::vector<double> sum;
    std::vector<double> sum_sq;

    BinAccumulator() = default;
    BinAccumulator(std::size_t bins, std::size_t times);
    void add(std::size_t bin, std::span<const double> values);
    // Merges groups of `factor` consecutive bins (the children of one parent
    // in a nested grid).
    BinAccumulator coarsen(std::size_t factor) const;
    std::size_t bytes() const;
};

// Second pass: regenerates every path of `ensemble.config` and adds its
// recorded values to acc[g] at bin assignment[g][path].
void accumulate_bins(const PathEnsemble& ensemble, std::span<const std::span<const std::int32_t>> assignment,
                     std::span<BinAccumulator> acc);

// Binary dump of summaries: header (magic, version, seed, config hash, count)
// followed by close/high/low/argmax per path.
void write_summary_dump(const std::string& path, const PathEnsemble& ensemble);
struct SummaryDump {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<PathSummary> summary;
};
SummaryDump read_summary_dump(const std::string& path);

}  // namespace condbm
