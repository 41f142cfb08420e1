#pragma once

#include <span>

#include "condbm/types.hpp"

// B(t) conditioned on (close, high), and on the high alone.
namespace condbm {

// One of the four shifted Gaussians whose signed sum is the generator
// P(B(t) in dx, max <= h, B(1) in dc).
struct FourGaussianTerm {
    int index = 1;  // 1..4
    double a = 0.0;  // centre at time 0
    double b = 0.0;  // centre at time 1
    double mu = 0.0;  // a (1 - t) + b t
    double g = 0.0;  // (a - b)^2 / (2 sigma^2)
    double psi = 0.0;  // exp(-g) / (sqrt(2 pi) sigma)
    int sign = 1;
    double tau = 0.0;  // d mu / d h
    double g_h = 0.0;  // d g / d h

    // psi * phi_{sigma_t^2}(x - mu)
    double value(double x, double t, const ModelParams& params) const;
};

FourGaussianTerm four_gaussian_term(int index, double t, const HighCloseStat& stat,
                                    const ModelParams& params);

// phi_{t sigma^2}(x) - phi_{t sigma^2}(2h - x): density of B(t) = x with no
// crossing of h on [0, t].
double survival_factor(double x, double t, double h, const ModelParams& params);

// Joint density of (B(t), close, high).
double joint_density_cht(double x, double t, const HighCloseStat& stat, const ModelParams& params);

// Unnormalized moments from the closed-form expressions.
MomentTriple moments_ch(double t, const HighCloseStat& stat, const ModelParams& params);

// Same moments summed term by term over the four Gaussians.
MomentTriple moments_ch_termwise(double t, const HighCloseStat& stat, const ModelParams& params);

// Conditional mean and variance at one time. Evaluated in a scaled form that
// stays finite when p(h, c) underflows.
MeanVariance conditional_moments_ch(double t, const HighCloseStat& stat, const ModelParams& params);

ConditionalCurve conditional_curve_ch(const HighCloseStat& stat, const ModelParams& params,
                                      std::span<const double> grid);

// Joint density of (B(t), high) with the close integrated out.
double density_given_high(double x, double t, double h, const ModelParams& params);

MomentTriple moments_given_high(double t, double h, const ModelParams& params,
                                const QuadratureControl& quad = {});

ConditionalCurve conditional_curve_given_high(double h, const ModelParams& params,
                                              std::span<const double> grid,
                                              const QuadratureControl& quad = {});

namespace detail {
// Shared by the curve builders: below this distance from an endpoint the
// analytic limit is returned.
inline constexpr double kEndpointGuard = 1e-9;
// Statistics closer than this (in units of sigma) to h = c = 0 use the
// negative-excursion limit.
inline constexpr double kDegenerateOffset = 1e-8;
// Floors roundoff-level negative variances (down to -1e-12 * scale) at 0.
double finish_variance(double v, double scale);
}  // namespace detail

}  // namespace condbm
