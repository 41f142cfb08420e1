#include "condbm/extrema.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "condbm/gaussian.hpp"
#include "condbm/quadrature.hpp"
#include "series.hpp"

namespace condbm {

using detail::phi;

double density_high(double h, const ModelParams& params) {
    params.validate();
    if (std::isnan(h)) throw DomainError("density_high: h is NaN");
    if (h < 0.0) return 0.0;
    return 2.0 * phi(h, params.variance());
}

double joint_high_close(const HighCloseStat& stat, const ModelParams& params) {
    params.validate();
    stat.validate();
    const double v = params.variance();
    const double r = 2.0 * stat.high - stat.close;
    return 2.0 * r / v * phi(r, v);
}

CloseGivenHigh close_given_high_moments(double h, const ModelParams& params) {
    params.validate();
    if (!(h >= 0.0) || !std::isfinite(h)) throw DomainError("close_given_high_moments: h must be >= 0");
    const double s = params.sigma;
    const double x = erfcx_product(h, s);
    const double k = std::sqrt(std::numbers::pi / 2.0);
    CloseGivenHigh out;
    out.mean = h - s * k * x;
    out.variance = 2.0 * s * s - 2.0 * h * s * k * x - 0.5 * std::numbers::pi * s * s * x * x;
    return out;
}

SeriesValue choi_roh_series(double c, double high, double low, const ModelParams& params,
                            const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    if (!(low < 0.0 && 0.0 < high)) throw DomainError("choi_roh: requires low < 0 < high");
    const double range = high - low;
    detail::require_resolvable_range(range, params.sigma, "choi_roh");
    if (c < low || c > high) return {0.0, 0};
    const double v = params.variance();
    auto group = [&](int n) {
        const double d = 2.0 * n * range;
        double g = -phi(c - 2.0 * high - d, v) - phi(c - 2.0 * low + d, v);
        g += (n == 0) ? phi(c, v) : phi(c - d, v) + phi(c + d, v);
        return g;
    };
    return detail::sum_image_groups(group, ctrl, "choi_roh");
}

double choi_roh_distribution(double c, double high, double low, const ModelParams& params,
                             const SeriesControl& ctrl) {
    return std::max(0.0, choi_roh_series(c, high, low, params, ctrl).value);
}

std::vector<double> choi_roh_partial_sums(double c, double high, double low,
                                          const ModelParams& params, int half_steps) {
    params.validate();
    const double v = params.variance();
    const double range = high - low;
    std::vector<double> out;
    double s = 0.0;
    for (int m = 0; m < half_steps; ++m) {
        if (m % 2 == 0) {
            const int n = m / 2;
            const double d = 2.0 * n * range;
            s += (n == 0) ? phi(c, v) : phi(c - d, v) + phi(c + d, v);
        } else {
            const double d = 2.0 * (m / 2) * range;
            s -= phi(c - 2.0 * high - d, v) + phi(c - 2.0 * low + d, v);
        }
        out.push_back(s);
    }
    return out;
}

SeriesValue density_hlc_series(const HighLowCloseStat& stat, const ModelParams& params,
                               const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    stat.validate();
    const double range = stat.range();
    detail::require_resolvable_range(range, params.sigma, "density_hlc");
    const double v = params.variance();
    const double c = stat.close;
    const double c2 = stat.close - 2.0 * stat.high;
    auto term = [&](int k) {
        const double kk = k;
        const double u1 = c - 2.0 * kk * range;
        const double u2 = c2 - 2.0 * kk * range;
        return kk * kk * (u1 * u1 / v - 1.0) * phi(u1, v) -
               kk * (kk + 1.0) * (u2 * u2 / v - 1.0) * phi(u2, v);
    };
    auto group = [&](int n) { return n == 0 ? term(0) : term(n) + term(-n); };
    SeriesValue s = detail::sum_image_groups(group, ctrl, "density_hlc");
    s.value *= 4.0 / v;
    return s;
}

double density_hlc(const HighLowCloseStat& stat, const ModelParams& params, const SeriesControl& ctrl) {
    return std::max(0.0, density_hlc_series(stat, params, ctrl).value);
}

double log_density_hlc(const HighLowCloseStat& stat, const ModelParams& params,
                       const SeriesControl& ctrl) {
    const double p = density_hlc(stat, params, ctrl);
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

SeriesValue density_hl_series(double high, double low, const ModelParams& params,
                              const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    if (!(low <= 0.0 && 0.0 <= high) || !(high > low) || !std::isfinite(high - low))
        throw DomainError("density_hl: requires low <= 0 <= high and a positive range");
    const double range = high - low;
    detail::require_resolvable_range(range, params.sigma, "density_hl");
    const double v = params.variance();
    auto xphi = [v](double x) { return x * phi(x, v); };
    auto term = [&](int k) {
        const double kk = k;
        const double hk = high - 2.0 * kk * range;
        const double lk = low - 2.0 * kk * range;
        return kk * kk * (xphi(hk) - xphi(lk)) -
               kk * (kk + 1.0) * (xphi(hk - 2.0 * high) - xphi(lk - 2.0 * high));
    };
    auto group = [&](int n) { return n == 0 ? term(0) : term(n) + term(-n); };
    SeriesValue s = detail::sum_image_groups(group, ctrl, "density_hl");
    s.value *= -4.0 / v;
    return s;
}

double density_hl(double high, double low, const ModelParams& params, const SeriesControl& ctrl) {
    return std::max(0.0, density_hl_series(high, low, params, ctrl).value);
}

double log_density_hl(double high, double low, const ModelParams& params, const SeriesControl& ctrl) {
    const double p = density_hl(high, low, params, ctrl);
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

SeriesValue feller_range_density(double x, const SeriesControl& ctrl) {
    ctrl.validate();
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("feller_range_density: x must be positive");
    double sum = 0.0;
    double last = 0.0;
    int small = 0;
    for (int k = 1; k <= ctrl.max_terms; ++k) {
        const double kk = k;
        last = 8.0 * kk * kk * phi(kk * x, 1.0);
        if (k % 2 == 0) last = -last;
        sum += last;
        small = std::abs(last) < ctrl.tail_tolerance * (1.0 + std::abs(sum)) ? small + 1 : 0;
        if (small >= 2) return {sum, k};
    }
    throw TruncationError("feller_range_density: series did not converge within max_terms",
                          ctrl.max_terms, std::abs(last));
}

double feller_range_density_dual(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("feller_range_density_dual: x must be positive");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double x2 = x * x;
    double sum = 0.0;
    for (int n = 0; n < 10000; ++n) {
        const double m = 2.0 * n + 1.0;
        const double b = 0.5 * pi2 * m * m;
        const double term = std::exp(-b / x2) * (b / (x2 * x2 * x) - 0.5 / (x2 * x));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum) || (term == 0.0 && n > 0)) break;
    }
    return 16.0 * sum;
}

double feller_range_cdf(double x) {
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    QuadratureControl q;
    q.rel_tolerance = 1e-13;
    return integrate([](double y) { return y > 0.0 ? feller_range_density_dual(y) : 0.0; }, 0.0, x, q);
}

}  // namespace condbm
