#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "condbm/monte_carlo.hpp"

// Path kernels. The serial versions are the reference; the OpenMP versions
// must reproduce them bit for bit.
namespace condbm::kernels {

struct GridPlan {
    std::vector<double> time;
    std::vector<double> sqrt_dt;  // per step
    std::vector<int> record_index;
};

GridPlan make_plan(const SimulationConfig& config);

// Fills buffer (n_steps + 1 values) with path `path`, pinned if configured,
// and returns its summary.
PathSummary simulate_path(const SimulationConfig& config, const GridPlan& plan, std::uint64_t path,
                          std::span<double> buffer);

using Assignment = std::span<const std::span<const std::int32_t>>;

namespace serial {
void summaries(const SimulationConfig& config, const GridPlan& plan, std::span<PathSummary> out,
               double* values);
void accumulate(const SimulationConfig& config, const GridPlan& plan, Assignment assignment,
                std::span<BinAccumulator> acc);
}  // namespace serial

namespace omp {
void summaries(const SimulationConfig& config, const GridPlan& plan, std::span<PathSummary> out,
               double* values);
void accumulate(const SimulationConfig& config, const GridPlan& plan, Assignment assignment,
                std::span<BinAccumulator> acc);
int max_threads();
}  // namespace omp

}  // namespace condbm::kernels
