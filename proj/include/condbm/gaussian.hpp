#pragma once

#include <cmath>
#include <numbers>

#include "condbm/types.hpp"

// Scalar kernels shared by the analytic modules. All functions are pure.
namespace condbm {

// (2 pi v)^(-1/2) exp(-x^2 / (2 v))
double gaussian_pdf(double x, Variance variance);

// 0.5 * erf(x / (sqrt(2) sigma)); odd, increasing, limits +-1/2.
double scaled_erf(double x, double sigma);

// exp(x^2) erfc(x) without overflow. Accurate to a few ulp for all real x
// where the result is finite.
double erfcx(double x);

// erfc(h / sqrt(2 sigma^2)) * exp(h^2 / (2 sigma^2)), h >= 0.
double erfcx_product(double h, double sigma);

// P(lo <= Z <= hi) for Z ~ N(0, s^2), keeping relative accuracy when the
// interval sits deep in one tail.
double normal_interval_mass(double lo, double hi, double s);

namespace detail {

// Unchecked density used inside series loops.
inline double phi(double x, double variance) noexcept {
    return std::exp(-0.5 * x * x / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

inline double half_erf(double x, double s) noexcept {
    return 0.5 * std::erf(x / (std::numbers::sqrt2 * s));
}

}  // namespace detail
}  // namespace condbm
