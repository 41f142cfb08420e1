#include <cmath>

#include <boost/random/normal_distribution.hpp>

#include "condbm/mc_kernels.hpp"
#include "condbm/rng.hpp"

namespace condbm::kernels {

GridPlan make_plan(const SimulationConfig& config) {
    GridPlan plan;
    plan.time = make_time_grid(config.grid, config.n_steps);
    plan.sqrt_dt.resize(config.n_steps);
    for (int i = 0; i < config.n_steps; ++i) plan.sqrt_dt[i] = std::sqrt(plan.time[i + 1] - plan.time[i]);
    plan.record_index = record_indices(config, plan.time);
    return plan;
}

PathSummary simulate_path(const SimulationConfig& config, const GridPlan& plan, std::uint64_t path,
                          std::span<double> buffer) {
    StreamRng rng(config.seed, path);
    boost::random::normal_distribution<double> normal;
    const int n = config.n_steps;
    const double sigma = config.sigma;
    double x = 0.0;
    buffer[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        x += sigma * plan.sqrt_dt[i] * normal(rng);
        buffer[i + 1] = x;
    }
    if (config.pin_close) {
        const double shift = buffer[n] - *config.pin_close;
        for (int i = 1; i < n; ++i) buffer[i] -= shift * plan.time[i];
        buffer[n] = *config.pin_close;
    }

    PathSummary s;
    s.close = buffer[n];
    s.high = 0.0;
    s.low = 0.0;
    if (config.extremes == ExtremeMode::Discrete) {
        for (int i = 1; i <= n; ++i) {
            const double v = buffer[i];
            if (v > s.high) {
                s.high = v;
                s.argmax = i;
            }
            if (v < s.low) s.low = v;
        }
    } else {
        const double var_scale = -2.0 * sigma * sigma;
        for (int i = 0; i < n; ++i) {
            const double a = buffer[i];
            const double b = buffer[i + 1];
            const double d2 = (b - a) * (b - a);
            const double dt = plan.sqrt_dt[i] * plan.sqrt_dt[i];
            const double top = 0.5 * (a + b + std::sqrt(d2 + var_scale * dt * std::log(rng.uniform_open0())));
            const double bottom = 0.5 * (a + b - std::sqrt(d2 + var_scale * dt * std::log(rng.uniform_open0())));
            if (top > s.high) {
                s.high = top;
                s.argmax = i;
            }
            if (bottom < s.low) s.low = bottom;
        }
    }
    return s;
}

namespace serial {

void summaries(const SimulationConfig& config, const GridPlan& plan, std::span<PathSummary> out,
               double* values) {
    std::vector<double> buffer(config.n_steps + 1);
    const std::size_t nrec = plan.record_index.size();
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = simulate_path(config, plan, p, buffer);
        if (values)
            for (std::size_t r = 0; r < nrec; ++r) values[p * nrec + r] = buffer[plan.record_index[r]];
    }
}

void accumulate(const SimulationConfig& config, const GridPlan& plan, Assignment assignment,
                std::span<BinAccumulator> acc) {
    std::vector<double> buffer(config.n_steps + 1);
    const std::size_t nrec = plan.record_index.size();
    std::vector<double> rec(nrec);
    for (std::int64_t p = 0; p < config.n_paths; ++p) {
        simulate_path(config, plan, p, buffer);
        for (std::size_t r = 0; r < nrec; ++r) rec[r] = buffer[plan.record_index[r]];
        for (std::size_t g = 0; g < acc.size(); ++g) acc[g].add(assignment[g][p], rec);
    }
}

}  // namespace serial
}  // namespace condbm::kernels
