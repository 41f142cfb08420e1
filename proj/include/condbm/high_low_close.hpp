#pragma once

#include <span>
#include <vector>

#include "condbm/types.hpp"

// B(t) conditioned on (close, high, low), and on (high, low) alone.
namespace condbm {

enum class Centering { Upper, Lower };

// Term (i, j, k) of the doubly reflected generator
// G = sum s_i psi exp(...) phi_{sigma_t^2}(x - mu). Derivatives are taken
// with respect to the barriers h and l at fixed close.
struct SeriesTermIJK {
    int i = 1, j = 0, k = 0;
    int sign = 1;
    double a = 0.0, b = 0.0;  // centres at t = 0 and t = 1
    double mu = 0.0;
    double g = 0.0;  // (a - b)^2 / (2 sigma^2)
    double tau = 0.0;  // d mu / dh
    double tau_hat = 0.0;  // d mu / dl
    double g_h = 0.0, g_l = 0.0, g_hl = 0.0;

    double psi(double sigma) const;
};

SeriesTermIJK make_series_term(int i, int j, int k, double t, const HighLowCloseStat& stat,
                               const ModelParams& params, Centering centering = Centering::Upper);

// Combinations v = 2(j(1-t)+kt), v~ = 2(j(1-t)-kt), w = 2(j+k), w~ = 2(j-k).
struct IndexCombos {
    double v, v_tilde, w, w_tilde;
};
IndexCombos index_combos(int j, int k, double t);

struct MomentCoefficients {
    double A = 0.0, B = 0.0, Gamma = 0.0, C = 0.0;
    double a[3] = {0, 0, 0};  // upper-limit coefficient per moment order
    double a_hat[3] = {0, 0, 0};  // lower-limit coefficient
    double e[3] = {0, 0, 0};  // coefficient of the interval mass
};
MomentCoefficients moment_coefficients(const SeriesTermIJK& term, double t,
                                       const HighLowCloseStat& stat, const ModelParams& params);

// Polynomial factor H(z) with -d^2/(dh dl) [phi(x - mu) e^{-g}] = H(x - mu) phi e^{-g}.
double series_polynomial(const SeriesTermIJK& term, double z, double t, const ModelParams& params);

// Half-width J of the symmetric window |j|, |k| <= J.
int truncation_window(double range, double sigma, double tail_tolerance);

// Two-barrier survival density of B(t) and its barrier derivatives.
struct BarrierSeries {
    double q = 0.0, d_h = 0.0, d_l = 0.0, d_hl = 0.0;
};
BarrierSeries barrier_series(double x, double t, double high, double low, const ModelParams& params,
                             const SeriesControl& ctrl = {});
// Same for the reversed segment from x at time t to c at time 1.
BarrierSeries barrier_series_reverse(double x, double t, const HighLowCloseStat& stat,
                                     const ModelParams& params, const SeriesControl& ctrl = {});

double barrier_series_Q(double x, double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl = {});

// Generator as the product Q * Q_R.
double generator_G(double x, double t, const HighLowCloseStat& stat, const ModelParams& params,
                   const SeriesControl& ctrl = {});
// Generator as the flattened (i, j, k) sum of shifted Gaussians.
double generator_G_series(double x, double t, const HighLowCloseStat& stat,
                          const ModelParams& params, const SeriesControl& ctrl = {});

// Joint density of (B(t), high, low, close) from the barrier-derivative
// products, and the conditional density from the shifted-Gaussian sum.
double joint_density_chl(double x, double t, const HighLowCloseStat& stat,
                         const ModelParams& params, const SeriesControl& ctrl = {});
double conditional_density_chl(double x, double t, const HighLowCloseStat& stat,
                               const ModelParams& params, const SeriesControl& ctrl = {});

// Unnormalized moments from the closed-form (i, j, k) series. Falls back to
// quadrature when the window would exceed 200.
MomentTriple moments_chl(double t, const HighLowCloseStat& stat, const ModelParams& params,
                         const SeriesControl& ctrl = {});
// Same moments summed over (j, k) with the four Gaussians combined.
MomentTriple moments_chl_collapsed(double t, const HighLowCloseStat& stat,
                                   const ModelParams& params, const SeriesControl& ctrl = {});
// Moments by quadrature of the barrier-derivative products.
MomentTriple quadrature_moments_chl(double t, const HighLowCloseStat& stat,
                                    const ModelParams& params, const SeriesControl& ctrl = {},
                                    const QuadratureControl& quad = {});

MeanVariance conditional_moments_chl(double t, const HighLowCloseStat& stat,
                                     const ModelParams& params, const SeriesControl& ctrl = {});
ConditionalCurve conditional_curve_chl(const HighLowCloseStat& stat, const ModelParams& params,
                                       std::span<const double> grid, const SeriesControl& ctrl = {});

// Close-marginalized generator Q * sum_k (R_1k - R_2k) with the close limits
// fixed at (upper, lower).
double distribution_hl(double x, double t, double high, double low, double upper, double lower,
                       const ModelParams& params, const SeriesControl& ctrl = {});
double distribution_hl(double x, double t, double high, double low, const ModelParams& params,
                       const SeriesControl& ctrl = {});
// Joint density of (B(t), high, low).
double joint_density_hl(double x, double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl = {});
double conditional_density_hl(double x, double t, double high, double low,
                              const ModelParams& params, const SeriesControl& ctrl = {});
MomentTriple moments_hl(double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl = {}, const QuadratureControl& quad = {});
ConditionalCurve conditional_curve_hl(double high, double low, const ModelParams& params,
                                      std::span<const double> grid, const SeriesControl& ctrl = {},
                                      const QuadratureControl& quad = {});

struct BoundaryResidual {
    // sum_i s_i [A (mu - h)/sigma_t^2 + B] f_i(h) divided by the sum of the
    // magnitudes of its summands; lower is the same at x = l for the
    // lower-centred terms.
    double upper = 0.0;
    double lower = 0.0;
    double scale = 0.0;  // 1 once computed

    double relative() const { return scale > 0.0 ? (std::abs(upper) + std::abs(lower)) / scale : 0.0; }
};
BoundaryResidual boundary_cancellation_check(double t, const HighLowCloseStat& stat,
                                             const ModelParams& params, int j, int k);

// Aggregates over i of s_i A, s_i A^l, s_i B, s_i B^l: closed forms and direct sums.
struct AggregateCoefficients {
    double A_bar = 0.0, A_bar_lower = 0.0, B_bar = 0.0, B_bar_lower = 0.0;
};
AggregateCoefficients aggregate_coefficients_closed(int j, int k, double t,
                                                    const HighLowCloseStat& stat,
                                                    const ModelParams& params);
AggregateCoefficients aggregate_coefficients_summed(int j, int k, double t,
                                                    const HighLowCloseStat& stat,
                                                    const ModelParams& params);

// G_mn(mu, h, l, s) = int_{l-mu}^{h-mu} (x + mu)^m x^n phi_{s^2}(x) dx.
double helper_integral_G(int m, int n, double mu, double high, double low, double s);

}  // namespace condbm
