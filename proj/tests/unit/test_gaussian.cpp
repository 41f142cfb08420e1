#include <cmath>
#include <numbers>

#include "doctest.h"

#include "condbm/gaussian.hpp"
#include "condbm/quadrature.hpp"

using namespace condbm;
using doctest::Approx;

TEST_CASE("erfcx matches high-precision values across both branches") {
    // exp(x^2) erfc(x) at 40 digits (mpmath)
    const double cases[][2] = {{-3.0, 16205.988853999586625}, {-0.5, 1.9523604891825570933},
                               {0.0, 1.0},
                               {0.3, 0.73459933456765514992},
                               {1.0, 0.42758357615580700441},
                               {2.9, 0.18460182595559082468},
                               {3.1, 0.17371840860540824468},
                               {10.0, 0.056140992743822585858},
                               {30.0, 0.018795888861416751497},
                               {1000.0, 0.0005641893014533876542}};
    for (const auto& c : cases) CHECK(erfcx(c[0]) == Approx(c[1]).epsilon(1e-14));
}

TEST_CASE("erfcx is continuous at the branch switch") {
    CHECK(erfcx(std::nextafter(3.0, 0.0)) == Approx(erfcx(3.0)).epsilon(1e-14));
}

TEST_CASE("erfcx_product at h = 10, sigma = 1") {
    // exp(50) erfc(10 / sqrt 2) at 40 digits
    CHECK(erfcx_product(10.0, 1.0) == Approx(0.079013388202772005889).epsilon(1e-13));
}

TEST_CASE("erfcx_product is scale free") {
    for (double s : {0.01, 0.5, 3.0}) CHECK(erfcx_product(2.0 * s, s) == Approx(erfcx_product(2.0, 1.0)).epsilon(1e-14));
}

TEST_CASE("gaussian_pdf integrates to one and rejects bad variance") {
    const double v = 0.37;
    CHECK(integrate([&](double x) { return gaussian_pdf(x, Variance(v)); }, -20.0, 20.0) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(Variance(0.0), DomainError);
    CHECK_THROWS_AS(Variance(-1.0), DomainError);
}

TEST_CASE("scaled_erf is odd with limits of one half") {
    CHECK(scaled_erf(0.7, 1.3) == Approx(-scaled_erf(-0.7, 1.3)));
    CHECK(scaled_erf(50.0, 1.0) == Approx(0.5));
}

TEST_CASE("normal_interval_mass keeps relative accuracy in the tail") {
    // P(8 <= Z <= 9) = (erfc(8/sqrt2) - erfc(9/sqrt2)) / 2
    const double exact = 0.5 * (std::erfc(8.0 / std::numbers::sqrt2) - std::erfc(9.0 / std::numbers::sqrt2));
    CHECK(normal_interval_mass(8.0, 9.0, 1.0) == Approx(exact).epsilon(1e-12));
    CHECK(normal_interval_mass(-9.0, -8.0, 1.0) == Approx(exact).epsilon(1e-12));
    CHECK(normal_interval_mass(-1.0, 1.0, 1.0) == Approx(std::erf(1.0 / std::numbers::sqrt2)).epsilon(1e-14));
}

TEST_CASE("time grids and trapezoid average") {
    const auto u = uniform_grid(4);
    REQUIRE(u.size() == 5);
    CHECK(u.front() == 0.0);
    CHECK(u.back() == 1.0);
    const auto c = cosine_grid(100);
    CHECK(c.front() == 0.0);
    CHECK(c.back() == 1.0);
    CHECK(c[1] - c[0] < u[1] - u[0]);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);
    std::vector<double> f;
    const auto g = uniform_grid(1000);
    for (double t : g) f.push_back(t * (1.0 - t));
    CHECK(time_average(g, f) == Approx(1.0 / 6.0).epsilon(1e-6));
}
