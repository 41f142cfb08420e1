#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "doctest.h"

#include "condbm/error.hpp"
#include "condbm/mc_kernels.hpp"
#include "condbm/monte_carlo.hpp"

using namespace condbm;
using doctest::Approx;

namespace {

struct Moments {
    double n = 0, mean = 0, m2 = 0;
    void add(double x) {
        n += 1;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double var() const { return m2 / (n - 1); }
    double se() const { return std::sqrt(var() / n); }
};

bool same(const PathSummary& a, const PathSummary& b) {
    return a.close == b.close && a.high == b.high && a.low == b.low && a.argmax == b.argmax;
}

}  // namespace

TEST_CASE("terminal variance is sigma^2") {
    SimulationConfig c;
    c.n_paths = 20000;
    c.n_steps = 64;
    c.sigma = 1.5;
    c.seed = 11;
    const PathEnsemble e = generate_paths(c);
    Moments m;
    for (const auto& s : e.summary) m.add(s.close);
    CHECK(std::abs(m.mean) < 4 * m.se());
    // sd of the sample variance is about var * sqrt(2 / n)
    CHECK(std::abs(m.var() - 2.25) < 4 * 2.25 * std::sqrt(2.0 / m.n));
}

TEST_CASE("bridge-sampled maximum has the half-normal mean, grid maximum sits below") {
    SimulationConfig c;
    c.n_paths = 40000;
    c.n_steps = 50;
    c.seed = 5;
    c.extremes = ExtremeMode::BridgeSampled;
    Moments exact;
    for (const auto& s : generate_paths(c).summary) exact.add(s.high);
    CHECK(std::abs(exact.mean - std::sqrt(2 / std::numbers::pi)) < 4 * exact.se());

    c.extremes = ExtremeMode::Discrete;
    Moments grid;
    for (const auto& s : generate_paths(c).summary) grid.add(s.high);
    // leading correction is 0.5826 / sqrt(n)
    const double want = std::sqrt(2 / std::numbers::pi) - 0.5826 / std::sqrt(50.0);
    CHECK(std::abs(grid.mean - want) < 4 * grid.se() + 0.01);
}

TEST_CASE("summaries respect high >= max(0, close) and low <= min(0, close)") {
    SimulationConfig c;
    c.n_paths = 2000;
    c.n_steps = 30;
    for (auto mode : {ExtremeMode::Discrete, ExtremeMode::BridgeSampled}) {
        c.extremes = mode;
        for (const auto& s : generate_paths(c).summary) {
            CHECK(s.high >= std::max(0.0, s.close));
            CHECK(s.low <= std::min(0.0, s.close));
        }
    }
}

TEST_CASE("pinned ensemble has bridge variance and the 1/6 average") {
    SimulationConfig c;
    c.n_paths = 20000;
    c.n_steps = 100;
    c.seed = 3;
    c.pin_close = 0.0;
    c.record_stride = 10;
    c.store_values = true;
    const PathEnsemble e = generate_paths(c);
    double avg = 0.0;
    std::vector<double> v(e.n_record());
    for (std::size_t r = 0; r < e.n_record(); ++r) {
        Moments m;
        for (std::size_t p = 0; p < e.n_paths(); ++p) m.add(e.value(p, r));
        const double t = e.record_time[r];
        CHECK(std::abs(m.var() - t * (1 - t)) <= 4 * t * (1 - t) * std::sqrt(2.0 / m.n) + 1e-15);
        v[r] = m.var();
    }
    avg = time_average(e.record_time, v);
    // trapezoid on 10 intervals of t(1-t) gives 1/6 - 1/600
    CHECK(avg == Approx(1.0 / 6 - 1.0 / 600).epsilon(0.03));
    for (const auto& s : e.summary) CHECK(s.close == 0.0);
}

TEST_CASE("pinning stored paths subtracts (B(1) - c) t") {
    SimulationConfig c;
    c.n_paths = 200;
    c.n_steps = 20;
    c.store_values = true;
    const PathEnsemble e = generate_paths(c);
    const PathEnsemble q = pin_to_close(e, 0.4);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        const double shift = e.value(p, e.n_record() - 1) - 0.4;
        double hi = 0.0, lo = 0.0;
        for (std::size_t r = 0; r < e.n_record(); ++r) {
            const double want = e.value(p, r) - shift * e.record_time[r];
            CHECK(q.value(p, r) == Approx(want).epsilon(1e-14).scale(1.0));
            hi = std::max(hi, want);
            lo = std::min(lo, want);
        }
        CHECK(q.summary[p].close == 0.4);
        CHECK(q.summary[p].high == Approx(hi).epsilon(1e-14).scale(1.0));
        CHECK(q.summary[p].low == Approx(lo).epsilon(1e-14).scale(1.0));
    }
    SimulationConfig bad = c;
    bad.store_values = false;
    CHECK_THROWS_AS(pin_to_close(generate_paths(bad), 0.0), DomainError);
}

TEST_CASE("sine-series paths have Brownian covariance") {
    FourierConfig f;
    f.n_paths = 20000;
    f.n_modes = 64;
    f.n_points = 100;
    f.seed = 9;
    f.record_times = {0.3, 0.7, 1.0};
    const PathEnsemble e = fourier_paths(f);
    REQUIRE(e.n_record() == 3);
    double s30 = 0, s37 = 0, s11 = 0;
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        s30 += e.value(p, 0) * e.value(p, 0);
        s37 += e.value(p, 0) * e.value(p, 1);
        s11 += e.value(p, 2) * e.value(p, 2);
    }
    const double n = static_cast<double>(e.n_paths());
    // truncation after 64 modes moves each entry by at most 2 / (64 pi^2)
    CHECK(std::abs(s11 / n - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(s30 / n - 0.3) < 4 * 0.3 * std::sqrt(2.0 / n) + 0.004);
    CHECK(std::abs(s37 / n - 0.3) < 4 * std::sqrt(0.3 * 0.7 / n) + 0.004);
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
    SimulationConfig c;
    c.n_paths = 3001;
    c.n_steps = 40;
    c.record_stride = 8;
    c.chunk_size = 97;
    c.extremes = ExtremeMode::BridgeSampled;
    c.store_values = true;
    const kernels::GridPlan plan = kernels::make_plan(c);
    const std::size_t nrec = plan.record_index.size();
    std::vector<PathSummary> a(c.n_paths), b(c.n_paths);
    std::vector<double> va(c.n_paths * nrec), vb(c.n_paths * nrec);
    kernels::serial::summaries(c, plan, a, va.data());
    kernels::omp::summaries(c, plan, b, vb.data());
    bool all = true;
    for (std::size_t i = 0; i < a.size(); ++i) all = all && same(a[i], b[i]);
    CHECK(all);
    CHECK(va == vb);

    std::vector<std::int32_t> bins(c.n_paths);
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = static_cast<std::int32_t>(i % 7);
    const std::span<const std::int32_t> one[] = {bins};
    std::vector<BinAccumulator> sa{BinAccumulator(7, nrec)}, sb{BinAccumulator(7, nrec)};
    kernels::serial::accumulate(c, plan, one, sa);
    kernels::omp::accumulate(c, plan, one, sb);
    CHECK(sa[0].count == sb[0].count);
    CHECK(sa[0].sum == sb[0].sum);
    CHECK(sa[0].sum_sq == sb[0].sum_sq);
}

TEST_CASE("the same seed reproduces the ensemble") {
    SimulationConfig c;
    c.n_paths = 500;
    c.n_steps = 25;
    c.seed = 77;
    const PathEnsemble a = generate_paths(c);
    c.parallel = true;
    const PathEnsemble b = generate_paths(c);
    bool all = true;
    for (std::size_t i = 0; i < a.n_paths(); ++i) all = all && same(a.summary[i], b.summary[i]);
    CHECK(all);
    c.seed = 78;
    CHECK_FALSE(same(generate_paths(c).summary[0], a.summary[0]));
}

TEST_CASE("config hash follows output-relevant fields") {
    SimulationConfig a;
    SimulationConfig b = a;
    CHECK(a.hash() == b.hash());
    b.parallel = true;
    b.chunk_size = 13;
    CHECK(a.hash() == b.hash());
    b.seed = 2;
    CHECK(a.hash() != b.hash());
    b = a;
    b.pin_close = 0.0;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("summary dump round trip") {
    SimulationConfig c;
    c.n_paths = 321;
    c.n_steps = 12;
    c.seed = 42;
    const PathEnsemble e = generate_paths(c);
    const auto file = std::filesystem::temp_directory_path() / "condbm_dump_test.bin";
    write_summary_dump(file.string(), e);
    const SummaryDump d = read_summary_dump(file.string());
    std::filesystem::remove(file);
    CHECK(d.seed == 42);
    CHECK(d.config_hash == c.hash());
    REQUIRE(d.summary.size() == e.summary.size());
    bool all = true;
    for (std::size_t i = 0; i < d.summary.size(); ++i) all = all && same(d.summary[i], e.summary[i]);
    CHECK(all);
    CHECK_THROWS_AS(read_summary_dump("/nonexistent/condbm.bin"), DataError);
}

TEST_CASE("storage beyond the budget is refused") {
    SimulationConfig c;
    c.n_paths = 100000;
    c.n_steps = 1000;
    c.store_values = true;
    c.memory_budget = 1 << 20;
    CHECK_THROWS_AS(generate_paths(c), CapacityError);
}

TEST_CASE("coarsening merges consecutive bins") {
    BinAccumulator a(6, 2);
    for (std::size_t b = 0; b < 6; ++b) {
        const double v[] = {double(b), double(b) * 2};
        a.add(b, v);
        a.add(b, v);
    }
    const BinAccumulator c = a.coarsen(3);
    REQUIRE(c.n_bins == 2);
    CHECK(c.count[0] == 6);
    CHECK(c.sum[0] == Approx(2 * (0 + 1 + 2)));
    CHECK(c.sum[1] == Approx(2 * 2 * (0 + 1 + 2)));
    CHECK(c.sum_sq[3] == Approx(2 * 4 * (9 + 16 + 25)));
    CHECK_THROWS(a.coarsen(4));
}

TEST_CASE("invalid configurations are rejected") {
    SimulationConfig c;
    c.n_steps = 0;
    CHECK_THROWS_AS(generate_paths(c), DomainError);
    c = {};
    c.sigma = -1;
    CHECK_THROWS_AS(generate_paths(c), DomainError);
    c = {};
    c.record_times = {1.5};
    CHECK_THROWS_AS(generate_paths(c), DomainError);
}
