#pragma once

#include "condbm/types.hpp"

// Laws of (close, high, low) at t = 1 for a path started at 0, and the
// density of the range high - low.
namespace condbm {

struct SeriesValue {
    double value = 0.0;
    int terms = 0;  // number of k-groups summed
};

struct CloseGivenHigh {
    double mean = 0.0;
    double variance = 0.0;
};

double density_high(double h, const ModelParams& params);

// Joint density of (high, close).
double joint_high_close(const HighCloseStat& stat, const ModelParams& params);

// E[close | high] and Var[close | high].
CloseGivenHigh close_given_high_moments(double h, const ModelParams& params);

// Density in c of {B(1) = c, low <= B(s) <= high on [0,1]}.
SeriesValue choi_roh_series(double c, double high, double low, const ModelParams& params,
                            const SeriesControl& ctrl = {});
double choi_roh_distribution(double c, double high, double low, const ModelParams& params,
                             const SeriesControl& ctrl = {});

// Partial sums of the alternating form: element n is the sum after n + 1
// half-steps (positive images, then negative images, ...).
std::vector<double> choi_roh_partial_sums(double c, double high, double low,
                                          const ModelParams& params, int half_steps);

// Joint density of (high, low, close).
SeriesValue density_hlc_series(const HighLowCloseStat& stat, const ModelParams& params,
                               const SeriesControl& ctrl = {});
double density_hlc(const HighLowCloseStat& stat, const ModelParams& params,
                   const SeriesControl& ctrl = {});
double log_density_hlc(const HighLowCloseStat& stat, const ModelParams& params,
                       const SeriesControl& ctrl = {});

// Joint density of (high, low).
SeriesValue density_hl_series(double high, double low, const ModelParams& params,
                              const SeriesControl& ctrl = {});
double density_hl(double high, double low, const ModelParams& params, const SeriesControl& ctrl = {});
double log_density_hl(double high, double low, const ModelParams& params,
                      const SeriesControl& ctrl = {});

// Density of the range of a standard Brownian path on [0,1]:
// 8 sum_{k>=1} (-1)^{k+1} k^2 phi(k x). Stops when two consecutive terms are
// below tail_tolerance * (1 + |partial sum|).
SeriesValue feller_range_density(double x, const SeriesControl& ctrl = {});

// Same density from the theta-transformed series, which converges in a few
// terms for small x and stays positive there.
double feller_range_density_dual(double x);

// P(range <= x) by quadrature, using whichever series is well conditioned.
double feller_range_cdf(double x);

}  // namespace condbm
