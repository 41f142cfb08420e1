#include <cmath>
#include <numbers>

#include "doctest.h"

#include "condbm/close_high.hpp"
#include "condbm/extrema.hpp"
#include "condbm/quadrature.hpp"

using namespace condbm;
using doctest::Approx;

namespace {
const double kTimes[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
const HighCloseStat kStats[] = {{0.25, 0.2}, {0.6, -0.3}, {1.0, 0.3}, {1.6, -2.4}, {2.4, 2.1}, {0.9, 0.0}};
}  // namespace

TEST_CASE("high/close moments at t = 0.4 against a finite-difference oracle") {
    // d/dH of the single-barrier propagator product, integrated at 30 digits
    const ModelParams p{1.0};
    const MomentTriple m = moments_ch(0.4, {1.0, 0.3}, p);
    CHECK(m.m0 == Approx(0.31976686308141554).epsilon(1e-13));
    CHECK(m.mean() == Approx(0.34947447800322089).epsilon(1e-12));
    CHECK(m.variance() == Approx(0.12520179460168921).epsilon(1e-11));
    const MeanVariance mv = conditional_moments_ch(0.4, {1.0, 0.3}, p);
    CHECK(mv.mean == Approx(0.34947447800322089).epsilon(1e-12));
    CHECK(mv.variance == Approx(0.12520179460168921).epsilon(1e-11));
}

TEST_CASE("zeroth moment equals the joint density for every t") {
    const ModelParams p{1.0};
    for (const auto& s : kStats)
        for (double t : kTimes) CHECK(moments_ch(t, s, p).m0 == Approx(joint_high_close(s, p)).epsilon(1e-12));
}

TEST_CASE("closed form, termwise and quadrature moments agree") {
    const ModelParams p{1.3};
    for (const auto& s0 : kStats) {
        const HighCloseStat s{1.3 * s0.high, 1.3 * s0.close};
        for (double t : kTimes) {
            const MomentTriple a = moments_ch(t, s, p);
            const MomentTriple b = moments_ch_termwise(t, s, p);
            const auto f = [&](double x) { return joint_density_cht(x, t, s, p); };
            const double lo = std::min(0.0, s.close) - 12.0 * p.sigma;
            const double q0 = integrate(f, lo, s.high);
            const double q1 = integrate([&](double x) { return x * f(x); }, lo, s.high);
            const double q2 = integrate([&](double x) { return x * x * f(x); }, lo, s.high);
            CHECK(b.m0 == Approx(a.m0).epsilon(1e-12));
            CHECK(b.m1 == Approx(a.m1).epsilon(1e-10).scale(a.m0));
            CHECK(b.m2 == Approx(a.m2).epsilon(1e-10).scale(a.m0));
            CHECK(q0 == Approx(a.m0).epsilon(1e-10));
            CHECK(q1 == Approx(a.m1).epsilon(1e-9).scale(a.m0));
            CHECK(q2 == Approx(a.m2).epsilon(1e-9).scale(a.m0));
        }
    }
}

TEST_CASE("the four Gaussian terms coincide in magnitude at x = h") {
    const ModelParams p{1.0};
    const HighCloseStat s{0.8, -0.2};
    for (double t : {0.2, 0.7}) {
        const double ref = std::exp(-0.5 * 0.64 / t) / std::sqrt(2 * std::numbers::pi * t) *
                           std::exp(-0.5 * 1.0 / (1 - t)) / std::sqrt(2 * std::numbers::pi * (1 - t));
        for (int i = 1; i <= 4; ++i) {
            const FourGaussianTerm f = four_gaussian_term(i, t, s, p);
            CHECK(std::abs(f.value(s.high, t, p)) == Approx(ref).epsilon(1e-13));
        }
    }
}

TEST_CASE("conditional mean stays below the high and variance is positive") {
    const ModelParams p{1.0};
    for (double h : {0.0, 0.05, 0.5, 2.0, 4.0})
        for (double c : {-3.0, -0.5, 0.0, 0.5, 4.0}) {
            if (c > h) continue;
            for (double t : kTimes) {
                const MeanVariance mv = conditional_moments_ch(t, {h, c}, p);
                CHECK(mv.mean <= h);
                CHECK(mv.variance >= 0.0);
                CHECK(std::isfinite(mv.mean));
            }
        }
}

TEST_CASE("zero high and close gives the negative excursion") {
    const ModelParams p{1.0};
    for (double t : kTimes) {
        const MeanVariance mv = conditional_moments_ch(t, {0.0, 0.0}, p);
        const double st = std::sqrt(t * (1 - t));
        CHECK(mv.mean == Approx(-2.0 * std::sqrt(2.0 / std::numbers::pi) * st).epsilon(1e-12));
        CHECK(mv.variance == Approx((3.0 - 8.0 / std::numbers::pi) * st * st).epsilon(1e-12));
        // approached continuously from a small positive high
        const MeanVariance near = conditional_moments_ch(t, {1e-4, 0.0}, p);
        CHECK(near.mean == Approx(mv.mean).epsilon(1e-3));
    }
}

TEST_CASE("time reversal: E[B(t) | -c, h] = E[B(1-t) | c, h + c] - c") {
    const ModelParams p{0.7};
    for (double c : {0.2, 1.0})
        for (double h : {0.1, 0.9})
            for (double t : kTimes) {
                const MeanVariance a = conditional_moments_ch(t, {h, -c}, p);
                const MeanVariance b = conditional_moments_ch(1 - t, {h + c, c}, p);
                CHECK(a.mean == Approx(b.mean - c).epsilon(1e-12));
                CHECK(a.variance == Approx(b.variance).epsilon(1e-11));
            }
}

TEST_CASE("curve endpoints") {
    const ModelParams p{1.0};
    const std::vector<double> g{0.0, 0.5, 1.0};
    const ConditionalCurve c = conditional_curve_ch({1.0, -0.4}, p, g);
    CHECK(c.mean[0] == 0.0);
    CHECK(c.variance[0] == 0.0);
    CHECK(c.mean[2] == Approx(-0.4));
    CHECK(c.variance[2] == Approx(0.0));
}

TEST_CASE("density given the high integrates to the high density") {
    const ModelParams p{1.0};
    for (double h : {0.3, 1.2})
        for (double t : {0.25, 0.75}) {
            const double m = integrate([&](double x) { return density_given_high(x, t, h, p); }, -12.0, h);
            CHECK(m == Approx(density_high(h, p)).epsilon(1e-10));
        }
}

TEST_CASE("curve given the high matches mixing the high/close curve over the close") {
    const ModelParams p{1.0};
    const double h = 0.9;
    const std::vector<double> g{0.3, 0.6};
    const ConditionalCurve direct = conditional_curve_given_high(h, p, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = g[i];
        const auto w = [&](double c) { return joint_high_close({h, c}, p); };
        const double z = integrate(w, h - 14.0, h);
        const double mean = integrate([&](double c) { return w(c) * moments_ch(t, {h, c}, p).mean(); }, h - 14.0, h) / z;
        const double second = integrate(
            [&](double c) {
                const MomentTriple m = moments_ch(t, {h, c}, p);
                return w(c) * m.m2 / m.m0;
            },
            h - 14.0, h) / z;
        CHECK(direct.mean[i] == Approx(mean).epsilon(1e-8));
        CHECK(direct.variance[i] == Approx(second - mean * mean).epsilon(1e-8));
    }
    const ConditionalCurve end = conditional_curve_given_high(h, p, std::vector<double>{1.0});
    CHECK(end.mean[0] == Approx(close_given_high_moments(h, p).mean));
}
