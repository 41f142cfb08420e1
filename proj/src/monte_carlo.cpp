#include "condbm/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

#include "condbm/mc_kernels.hpp"
#include "condbm/rng.hpp"

namespace condbm {

namespace {

class Fnv1a {
public:
    template <class T>
    void add(const T& v) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        for (unsigned char b : bytes) {
            h_ ^= b;
            h_ *= 0x100000001B3ULL;
        }
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

constexpr char kDumpMagic[4] = {'C', 'B', 'M', 'S'};
constexpr std::uint32_t kDumpVersion = 1;

}  // namespace

void SimulationConfig::validate() const {
    if (n_paths < 1) throw DomainError("simulation: n_paths must be >= 1");
    if (n_steps < 2) throw DomainError("simulation: n_steps must be >= 2");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("simulation: sigma must be positive");
    if (record_stride < 1) throw DomainError("simulation: record_stride must be >= 1");
    for (double t : record_times)
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("simulation: record times must lie in [0, 1]");
    if (pin_close && !std::isfinite(*pin_close)) throw DomainError("simulation: pin_close must be finite");
}

std::uint64_t SimulationConfig::hash() const {
    Fnv1a f;
    f.add(n_paths);
    f.add(n_steps);
    f.add(sigma);
    f.add(seed);
    f.add(static_cast<int>(grid));
    f.add(static_cast<int>(extremes));
    f.add(pin_close.has_value());
    f.add(pin_close.value_or(0.0));
    f.add(record_stride);
    for (double t : record_times) f.add(t);
    return f.value();
}

std::vector<double> make_time_grid(TimeGridKind kind, int n_steps) {
    return kind == TimeGridKind::Uniform ? uniform_grid(n_steps) : cosine_grid(n_steps);
}

std::vector<int> record_indices(const SimulationConfig& config, std::span<const double> grid) {
    std::vector<int> idx;
    const int n = static_cast<int>(grid.size()) - 1;
    if (!config.record_times.empty()) {
        for (double t : config.record_times) {
            const auto it = std::lower_bound(grid.begin(), grid.end(), t);
            int i = static_cast<int>(it - grid.begin());
            if (i > n) i = n;
            if (i > 0 && std::abs(grid[i - 1] - t) <= std::abs(grid[i] - t)) --i;
            idx.push_back(i);
        }
        return idx;
    }
    for (int i = 0; i <= n; i += config.record_stride) idx.push_back(i);
    if (idx.back() != n) idx.push_back(n);
    return idx;
}

PathEnsemble generate_paths(const SimulationConfig& config) {
    config.validate();
    const kernels::GridPlan plan = kernels::make_plan(config);
    PathEnsemble ens;
    ens.config = config;
    ens.time = plan.time;
    ens.record_index = plan.record_index;
    for (int i : plan.record_index) ens.record_time.push_back(plan.time[i]);

    const std::size_t n = static_cast<std::size_t>(config.n_paths);
    std::size_t bytes = n * sizeof(PathSummary);
    if (config.store_values) bytes += n * plan.record_index.size() * sizeof(double);
    if (bytes > config.memory_budget)
        throw CapacityError("generate_paths: ensemble exceeds the memory budget", bytes);

    ens.summary.resize(n);
    if (config.store_values) ens.values.resize(n * plan.record_index.size());
    double* values = config.store_values ? ens.values.data() : nullptr;
    if (config.parallel)
        kernels::omp::summaries(config, plan, ens.summary, values);
    else
        kernels::serial::summaries(config, plan, ens.summary, values);
    return ens;
}

PathEnsemble fourier_paths(const FourierConfig& config) {
    if (config.n_paths < 1 || config.n_modes < 1 || config.n_points < 1)
        throw DomainError("fourier_paths: counts must be >= 1");
    if (!(config.sigma > 0.0)) throw DomainError("fourier_paths: sigma must be positive");
    SimulationConfig sc;
    sc.n_paths = config.n_paths;
    sc.n_steps = std::max(2, config.n_points);
    sc.sigma = config.sigma;
    sc.seed = config.seed;
    sc.record_times = config.record_times;
    sc.store_values = !config.record_times.empty();

    PathEnsemble ens;
    ens.config = sc;
    ens.time = uniform_grid(sc.n_steps);
    ens.record_index = config.record_times.empty() ? std::vector<int>{} : record_indices(sc, ens.time);
    for (int i : ens.record_index) ens.record_time.push_back(ens.time[i]);
    const std::size_t n = static_cast<std::size_t>(config.n_paths);
    const std::size_t nrec = ens.record_index.size();
    ens.summary.resize(n);
    ens.values.resize(n * nrec);

    const int modes = config.n_modes;
    const std::size_t npts = ens.time.size();
    std::vector<double> xi(modes + 1);
    std::vector<double> path(npts);
    // Pre-tabulate sin(n pi t_i) / (n pi) for all points and modes when it fits.
    const bool tabulate = npts * static_cast<std::size_t>(modes) <= (std::size_t(1) << 24);
    std::vector<double> basis;
    if (tabulate) {
        basis.resize(npts * modes);
        for (std::size_t i = 0; i < npts; ++i)
            for (int m = 1; m <= modes; ++m)
                basis[i * modes + (m - 1)] = std::sin(m * std::numbers::pi * ens.time[i]) / (m * std::numbers::pi);
    }
    for (std::size_t p = 0; p < n; ++p) {
        StreamRng rng(config.seed, p);
        boost::random::normal_distribution<double> normal;
        for (double& z : xi) z = normal(rng);
        for (std::size_t i = 0; i < npts; ++i) {
            const double t = ens.time[i];
            double acc = 0.0;
            if (tabulate) {
                const double* row = basis.data() + i * modes;
                for (int m = 1; m <= modes; ++m) acc += xi[m] * row[m - 1];
            } else {
                // sin(m theta) by the Chebyshev recurrence.
                const double theta = std::numbers::pi * t;
                const double c2 = 2.0 * std::cos(theta);
                double prev = 0.0;
                double cur = std::sin(theta);
                for (int m = 1; m <= modes; ++m) {
                    acc += xi[m] * cur / (m * std::numbers::pi);
                    const double next = c2 * cur - prev;
                    prev = cur;
                    cur = next;
                }
            }
            path[i] = config.sigma * (xi[0] * t + std::numbers::sqrt2 * acc);
        }
        path[0] = 0.0;
        path[npts - 1] = config.sigma * xi[0];
        PathSummary s;
        s.close = path[npts - 1];
        for (std::size_t i = 1; i < npts; ++i) {
            if (path[i] > s.high) {
                s.high = path[i];
                s.argmax = static_cast<std::int32_t>(i);
            }
            s.low = std::min(s.low, path[i]);
        }
        ens.summary[p] = s;
        for (std::size_t r = 0; r < nrec; ++r) ens.values[p * nrec + r] = path[ens.record_index[r]];
    }
    return ens;
}

PathEnsemble pin_to_close(const PathEnsemble& ensemble, double close) {
    const std::size_t nrec = ensemble.n_record();
    const bool full = nrec == ensemble.time.size() && !ensemble.values.empty();
    if (!full || ensemble.config.extremes != ExtremeMode::Discrete)
        throw DomainError("pin_to_close: needs stored values on the full grid with discrete extremes");
    PathEnsemble out = ensemble;
    out.config.pin_close = close;
    for (std::size_t p = 0; p < out.n_paths(); ++p) {
        double* row = out.values.data() + p * nrec;
        const double shift = row[nrec - 1] - close;
        PathSummary s;
        for (std::size_t r = 0; r < nrec; ++r) {
            row[r] -= shift * out.record_time[r];
            if (r > 0 && row[r] > s.high) {
                s.high = row[r];
                s.argmax = static_cast<std::int32_t>(r);
            }
            if (r > 0) s.low = std::min(s.low, row[r]);
        }
        row[0] = 0.0;
        row[nrec - 1] = close;
        s.close = close;
        s.high = std::max(s.high, close);
        s.low = std::min(s.low, close);
        out.summary[p] = s;
    }
    return out;
}

BinAccumulator::BinAccumulator(std::size_t bins, std::size_t times)
    : n_bins(bins), n_times(times), count(bins, 0), sum(bins * times, 0.0), sum_sq(bins * times, 0.0) {}

void BinAccumulator::add(std::size_t bin, std::span<const double> values) {
    ++count[bin];
    double* s = sum.data() + bin * n_times;
    double* q = sum_sq.data() + bin * n_times;
    for (std::size_t i = 0; i < n_times; ++i) {
        s[i] += values[i];
        q[i] += values[i] * values[i];
    }
}

BinAccumulator BinAccumulator::coarsen(std::size_t factor) const {
    if (factor == 0 || n_bins % factor != 0) throw DomainError("BinAccumulator::coarsen: factor must divide n_bins");
    BinAccumulator out(n_bins / factor, n_times);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t p = b / factor;
        out.count[p] += count[b];
        for (std::size_t i = 0; i < n_times; ++i) {
            out.sum[p * n_times + i] += sum[b * n_times + i];
            out.sum_sq[p * n_times + i] += sum_sq[b * n_times + i];
        }
    }
    return out;
}

std::size_t BinAccumulator::bytes() const {
    return count.size() * sizeof(std::int64_t) + (sum.size() + sum_sq.size()) * sizeof(double);
}

void accumulate_bins(const PathEnsemble& ensemble, std::span<const std::span<const std::int32_t>> assignment,
                     std::span<BinAccumulator> acc) {
    const SimulationConfig& config = ensemble.config;
    if (assignment.size() != acc.size()) throw DomainError("accumulate_bins: one assignment per accumulator");
    for (std::size_t g = 0; g < acc.size(); ++g) {
        if (assignment[g].size() != ensemble.n_paths())
            throw DomainError("accumulate_bins: assignment length differs from path count");
        if (acc[g].n_times != ensemble.n_record())
            throw DomainError("accumulate_bins: accumulator time count differs from recorded points");
    }
    const kernels::GridPlan plan = kernels::make_plan(config);
    if (config.parallel)
        kernels::omp::accumulate(config, plan, assignment, acc);
    else
        kernels::serial::accumulate(config, plan, assignment, acc);
}

void write_summary_dump(const std::string& path, const PathEnsemble& ensemble) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open summary dump for writing: " + path);
    const std::uint64_t seed = ensemble.config.seed;
    const std::uint64_t hash = ensemble.config.hash();
    const std::uint64_t n = ensemble.n_paths();
    out.write(kDumpMagic, 4);
    out.write(reinterpret_cast<const char*>(&kDumpVersion), sizeof kDumpVersion);
    out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    out.write(reinterpret_cast<const char*>(&hash), sizeof hash);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const PathSummary& s : ensemble.summary) {
        out.write(reinterpret_cast<const char*>(&s.close), sizeof s.close);
        out.write(reinterpret_cast<const char*>(&s.high), sizeof s.high);
        out.write(reinterpret_cast<const char*>(&s.low), sizeof s.low);
        out.write(reinterpret_cast<const char*>(&s.argmax), sizeof s.argmax);
    }
    if (!out) throw DataError("failed writing summary dump: " + path);
}

SummaryDump read_summary_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open summary dump: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0;
    SummaryDump d;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in || std::memcmp(magic, kDumpMagic, 4) != 0 || version != kDumpVersion)
        throw DataError("not a summary dump: " + path);
    in.read(reinterpret_cast<char*>(&d.seed), sizeof d.seed);
    in.read(reinterpret_cast<char*>(&d.config_hash), sizeof d.config_hash);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    d.summary.resize(n);
    for (PathSummary& s : d.summary) {
        in.read(reinterpret_cast<char*>(&s.close), sizeof s.close);
        in.read(reinterpret_cast<char*>(&s.high), sizeof s.high);
        in.read(reinterpret_cast<char*>(&s.low), sizeof s.low);
        in.read(reinterpret_cast<char*>(&s.argmax), sizeof s.argmax);
    }
    if (!in) throw DataError("truncated summary dump: " + path);
    return d;
}

}  // namespace condbm
