#include <algorithm>
#include <vector>

#include "condbm/mc_kernels.hpp"

#ifdef CONDBM_HAVE_OPENMP
#include <omp.h>
#endif

namespace condbm::kernels::omp {

int max_threads() {
#ifdef CONDBM_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void summaries(const SimulationConfig& config, const GridPlan& plan, std::span<PathSummary> out,
               double* values) {
    const std::int64_t n = static_cast<std::int64_t>(out.size());
    const std::size_t nrec = plan.record_index.size();
#pragma omp parallel
    {
        std::vector<double> buffer(config.n_steps + 1);
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t p = 0; p < n; ++p) {
            out[p] = simulate_path(config, plan, p, buffer);
            if (values)
                for (std::size_t r = 0; r < nrec; ++r) values[p * nrec + r] = buffer[plan.record_index[r]];
        }
    }
}

void accumulate(const SimulationConfig& config, const GridPlan& plan, Assignment assignment,
                std::span<BinAccumulator> acc) {
    const std::int64_t chunk = std::max(1, config.chunk_size);
    const std::int64_t n_chunks = (config.n_paths + chunk - 1) / chunk;
    const std::size_t nrec = plan.record_index.size();
    // Chunks are generated concurrently and merged in path order, so the sums
    // match the serial kernel exactly.
#pragma omp parallel
    {
        std::vector<double> buffer(config.n_steps + 1);
        std::vector<double> rec(chunk * nrec);
#pragma omp for ordered schedule(static, 1)
        for (std::int64_t c = 0; c < n_chunks; ++c) {
            const std::int64_t first = c * chunk;
            const std::int64_t last = std::min(config.n_paths, first + chunk);
            for (std::int64_t p = first; p < last; ++p) {
                simulate_path(config, plan, p, buffer);
                double* row = rec.data() + (p - first) * nrec;
                for (std::size_t r = 0; r < nrec; ++r) row[r] = buffer[plan.record_index[r]];
            }
#pragma omp ordered
            {
                for (std::int64_t p = first; p < last; ++p) {
                    const std::span<const double> row(rec.data() + (p - first) * nrec, nrec);
                    for (std::size_t g = 0; g < acc.size(); ++g) acc[g].add(assignment[g][p], row);
                }
            }
        }
    }
}

}  // namespace condbm::kernels::omp
