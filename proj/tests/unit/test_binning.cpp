#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "condbm/binning.hpp"
#include "condbm/error.hpp"
#include "condbm/monte_carlo.hpp"

using namespace condbm;
using doctest::Approx;

namespace {

std::vector<double> sorted_normals(std::size_t n, unsigned seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (double& x : v) x = z(g);
    std::sort(v.begin(), v.end());
    return v;
}

PathEnsemble small_ensemble(std::int64_t n, std::uint64_t seed) {
    SimulationConfig c;
    c.n_paths = n;
    c.n_steps = 100;
    c.seed = seed;
    c.record_stride = 10;
    return generate_paths(c);
}

}  // namespace

TEST_CASE("alpha = 1 gives counts equal within one") {
    const auto v = sorted_normals(1003, 1);
    const auto cuts = density_power_cuts(v, 10, 1.0);
    REQUIRE(cuts.size() == 11);
    std::size_t lo = v.size(), hi = 0;
    for (int k = 0; k < 10; ++k) {
        lo = std::min(lo, cuts[k + 1] - cuts[k]);
        hi = std::max(hi, cuts[k + 1] - cuts[k]);
    }
    CHECK(hi - lo <= 1);
}

TEST_CASE("alpha < 1 thins the tail bins") {
    const auto v = sorted_normals(100000, 2);
    const auto even = density_power_cuts(v, 20, 1.0);
    const auto thin = density_power_cuts(v, 20, 0.7);
    const std::size_t outer = thin[1], centre = thin[11] - thin[10];
    CHECK(outer < centre);
    CHECK(thin[1] < even[1]);
    CHECK(v.size() - thin[19] < v.size() - even[19]);
    for (int k = 0; k < 20; ++k) CHECK(thin[k + 1] > thin[k]);
}

TEST_CASE("cut arguments are validated") {
    const auto v = sorted_normals(5, 3);
    CHECK_THROWS_AS(density_power_cuts(v, 6, 1.0), DomainError);
    CHECK_THROWS_AS(density_power_cuts(v, 2, 0.0), DomainError);
    CHECK_THROWS_AS(density_power_cuts(v, 0, 1.0), DomainError);
}

TEST_CASE("nested bins partition the ensemble") {
    const PathEnsemble e = small_ensemble(6000, 4);
    const BinGrid g = build_bins(e.summary, {Statistic::Close, Statistic::High, Statistic::Low}, {4, 3, 5}, 0.7, 20);
    REQUIRE(g.n_bins() == 60);
    std::vector<std::int64_t> tally(60, 0);
    for (auto a : g.assignment) {
        REQUIRE(a >= 0);
        REQUIRE(a < 60);
        ++tally[a];
    }
    CHECK(tally == g.counts);
    std::int64_t total = 0;
    for (std::size_t b = 0; b < 60; ++b) {
        total += g.counts[b];
        CHECK(g.counts[b] >= 1);
        CHECK(g.flagged[b] == (g.counts[b] < 20));
    }
    CHECK(total == 6000);

    // outer dimension: every close in bin ia lies below every close in ia + 1
    std::vector<double> lo(4, 1e300), hi(4, -1e300);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        const int ia = g.assignment[p] / 15;
        lo[ia] = std::min(lo[ia], e.summary[p].close);
        hi[ia] = std::max(hi[ia], e.summary[p].close);
    }
    for (int k = 0; k < 3; ++k) CHECK(hi[k] <= lo[k + 1]);

    // within each (close, high) parent the low children are ordered
    std::vector<double> llo(60, 1e300), lhi(60, -1e300);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        llo[g.assignment[p]] = std::min(llo[g.assignment[p]], e.summary[p].low);
        lhi[g.assignment[p]] = std::max(lhi[g.assignment[p]], e.summary[p].low);
    }
    for (int parent = 0; parent < 12; ++parent)
        for (int c = 0; c < 4; ++c) CHECK(lhi[parent * 5 + c] <= llo[parent * 5 + c + 1]);
}

TEST_CASE("bin statistics means are the averages of their members") {
    const PathEnsemble e = small_ensemble(3000, 5);
    const BinGrid g = build_bins(e.summary, {Statistic::High, Statistic::Low}, {5, 4});
    std::vector<double> sh(g.n_bins(), 0.0), sl(g.n_bins(), 0.0);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        sh[g.assignment[p]] += e.summary[p].high;
        sl[g.assignment[p]] += e.summary[p].low;
    }
    for (std::size_t b = 0; b < g.n_bins(); ++b) {
        CHECK(g.stat_means[b][0] == Approx(sh[b] / g.counts[b]));
        CHECK(g.stat_means[b][1] == Approx(sl[b] / g.counts[b]));
    }
}

TEST_CASE("empirical curves from a hand-filled accumulator") {
    BinAccumulator acc(3, 3);
    const double a1[] = {0, 1, 2}, a2[] = {0, 3, 4}, b1[] = {0, 2, 2}, b2[] = {0, 2, 6}, b3[] = {0, 5, 4};
    const double lone[] = {0, 9, 9};
    acc.add(0, a1);
    acc.add(0, a2);
    acc.add(1, b1);
    acc.add(1, b2);
    acc.add(1, b3);
    acc.add(2, lone);
    const double t[] = {0.0, 0.5, 1.0};
    const EnsembleVarianceReport r = empirical_curves(acc, t);
    CHECK(r.mean_at(0, 1) == Approx(2.0));
    CHECK(r.variance_at(0, 1) == Approx(2.0));
    CHECK(r.mean_at(1, 2) == Approx(4.0));
    CHECK(r.variance_at(1, 2) == Approx(4.0));
    CHECK(r.variance_at(2, 1) == 0.0);
    // count-weighted, the single-path bin has weight zero
    CHECK(r.ensemble_variance[1] == Approx((2 * 2.0 + 3 * 3.0) / 5));
    CHECK(r.ensemble_variance[2] == Approx((2 * 2.0 + 3 * 4.0) / 5));
    CHECK(r.time_average == Approx(0.25 * r.ensemble_variance[0] + 0.5 * r.ensemble_variance[1] +
                                   0.25 * r.ensemble_variance[2]));

    const std::vector<bool> flags{false, true, false};
    const EnsembleVarianceReport x = empirical_curves(acc, t, flags, true);
    CHECK(x.ensemble_variance[1] == Approx(2.0));
    CHECK_THROWS_AS(empirical_curves(acc, std::span<const double>(t, 2)), DomainError);
}

TEST_CASE("analytic curves compared with themselves have zero error") {
    const PathEnsemble e = small_ensemble(2000, 6);
    const ModelParams p{1.0};
    for (Condition c : {Condition::Close, Condition::High, Condition::CloseHigh}) {
        const auto dims = condition_dims(c);
        const BinGrid g = build_bins(e.summary, dims, std::vector<int>(dims.size(), 4));
        EnsembleVarianceReport r;
        r.time = e.record_time;
        r.counts = g.counts;
        r.flagged = g.flagged;
        for (std::size_t b = 0; b < g.n_bins(); ++b) {
            const ConditionalCurve a = analytic_curve(c, g.stat_means[b], p, r.time);
            r.mean.insert(r.mean.end(), a.mean.begin(), a.mean.end());
            r.variance.insert(r.variance.end(), a.variance.begin(), a.variance.end());
        }
        const auto err = compare_to_analytic(r, g, c, p);
        REQUIRE(err.size() == g.n_bins());
        for (const auto& x : err) {
            CHECK(x.mse_mean == Approx(0.0).scale(1.0));
            CHECK(x.mse_variance == Approx(0.0).scale(1.0));
        }
    }
}

TEST_CASE("error against the analytic curves shrinks with ensemble size") {
    auto median_mse = [](std::int64_t n) {
        ExperimentConfig cfg;
        cfg.sim.n_paths = n;
        cfg.sim.n_steps = 200;
        cfg.sim.record_stride = 20;
        cfg.sim.seed = 7;
        cfg.condition = Condition::Close;
        cfg.nbins = 8;
        cfg.alpha = 1.0;
        const ExperimentResult r = run_conditioned_experiment(cfg);
        auto err = compare_to_analytic(r.report, r.grid, cfg.condition, ModelParams{1.0});
        std::vector<double> m;
        for (const auto& x : err) m.push_back(x.mse_variance);
        std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
        return m[m.size() / 2];
    };
    CHECK(median_mse(64000) < 0.5 * median_mse(4000));
}

TEST_CASE("wide outer close bins inflate the late-time variance") {
    ExperimentConfig cfg;
    cfg.sim.n_paths = 40000;
    cfg.sim.n_steps = 100;
    cfg.sim.record_stride = 10;
    cfg.sim.seed = 8;
    cfg.condition = Condition::Close;
    cfg.nbins = 10;
    const ExperimentResult r = run_conditioned_experiment(cfg);
    const std::size_t i = r.report.n_times() - 2;  // t = 0.9
    const double t = r.report.time[i];
    const double inner = r.report.variance_at(5, i);
    const double outer = r.report.variance_at(0, i);
    CHECK(inner == Approx(t * (1 - t)).epsilon(0.1));
    CHECK(outer > inner);
}

TEST_CASE("nested coarsening reproduces the parent grid") {
    const PathEnsemble e = small_ensemble(4000, 9);
    const BinGrid g = build_bins(e.summary, {Statistic::Close, Statistic::High}, {4, 5});
    const BinGrid parent = build_bins(e.summary, {Statistic::Close}, {4});
    for (std::size_t p = 0; p < e.n_paths(); ++p) CHECK(g.assignment[p] / 5 == parent.assignment[p]);
}

TEST_CASE("condition names round trip") {
    for (const char* n : {"close", "high", "ch", "hl", "chl"}) CHECK(condition_name(parse_condition(n)) == n);
    CHECK_THROWS_AS(parse_condition("lh"), DomainError);
    CHECK(condition_dims(Condition::HighLow) == std::vector<Statistic>{Statistic::High, Statistic::Low});
}

TEST_CASE("report CSV layout") {
    const PathEnsemble e = small_ensemble(500, 10);
    ExperimentConfig cfg;
    cfg.sim.n_paths = 500;
    cfg.sim.n_steps = 20;
    cfg.sim.record_stride = 10;
    cfg.condition = Condition::CloseHigh;
    cfg.nbins = 3;
    const ExperimentResult r = run_conditioned_experiment(cfg);
    const std::string csv = report_csv(r.grid, r.report);
    CHECK(csv.rfind("bin,count,flagged,close_mean,high_mean,t,mean,variance\n", 0) == 0);
    CHECK(csv.find("# ensemble\nt,ensemble_variance\n") != std::string::npos);
    CHECK(csv.find("# time_average,") != std::string::npos);
    const auto rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + 9 * 3 + 2 + 3 + 1);
}
