#include "condbm/close_high.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

#include "condbm/extrema.hpp"
#include "condbm/gaussian.hpp"
#include "condbm/quadrature.hpp"

namespace condbm {

using detail::phi;

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_time(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError(std::string(what) + ": t must lie in [0, 1]");
}

}  // namespace

double detail::finish_variance(double v, double scale) {
    if (v >= 0.0) return v;
    if (v < -1e-12 * scale) throw NumericError("negative conditional variance", v);
    return 0.0;
}

double FourGaussianTerm::value(double x, double t, const ModelParams& params) const {
    return psi * phi(x - mu, params.bridge_variance(t));
}

FourGaussianTerm four_gaussian_term(int index, double t, const HighCloseStat& stat,
                                    const ModelParams& params) {
    params.validate();
    const double h = stat.high;
    const double c = stat.close;
    FourGaussianTerm f;
    f.index = index;
    double a_h = 0.0;
    double b_h = 0.0;
    switch (index) {
        case 1: f.a = 0.0; f.b = c; f.sign = 1; break;
        case 2: f.a = 0.0; f.b = 2.0 * h - c; b_h = 2.0; f.sign = -1; break;
        case 3: f.a = 2.0 * h; f.b = c; a_h = 2.0; f.sign = -1; break;
        case 4: f.a = 2.0 * h; f.b = 2.0 * h - c; a_h = 2.0; b_h = 2.0; f.sign = 1; break;
        default: throw DomainError("four_gaussian_term: index must be 1..4");
    }
    const double v = params.variance();
    const double d = f.a - f.b;
    f.mu = f.a * (1.0 - t) + f.b * t;
    f.g = d * d / (2.0 * v);
    f.psi = phi(d, v);
    f.tau = a_h * (1.0 - t) + b_h * t;
    f.g_h = d * (a_h - b_h) / v;
    return f;
}

double survival_factor(double x, double t, double h, const ModelParams& params) {
    params.validate();
    if (!(t > 0.0 && t < 1.0)) throw DomainError("survival_factor: t must lie in (0, 1)");
    if (!(x <= h)) throw DomainError("survival_factor: requires x <= h");
    const double v = t * params.variance();
    return std::max(0.0, phi(x, v) - phi(2.0 * h - x, v));
}

double joint_density_cht(double x, double t, const HighCloseStat& stat, const ModelParams& params) {
    params.validate();
    stat.validate();
    if (!(t > 0.0 && t < 1.0)) throw DomainError("joint_density_cht: t must lie in (0, 1)");
    if (!(x <= stat.high)) throw DomainError("joint_density_cht: requires x <= h");
    const double v = params.variance();
    const double h = stat.high;
    const double c = stat.close;
    // Right segment runs for 1 - t from x to c under the barrier h - x.
    auto surv = [](double y, double var, double bar) { return phi(y, var) - phi(2.0 * bar - y, var); };
    auto first_hit = [](double y, double var, double bar) {
        const double m = 2.0 * bar - y;
        return 2.0 * m / var * phi(m, var);
    };
    const double vl = t * v;
    const double vr = (1.0 - t) * v;
    const double out = surv(x, vl, h) * first_hit(c - x, vr, h - x) +
                       first_hit(x, vl, h) * surv(c - x, vr, h - x);
    return std::max(0.0, out);
}

MomentTriple moments_ch(double t, const HighCloseStat& stat, const ModelParams& params) {
    params.validate();
    stat.validate();
    check_time(t, "moments_ch");
    const double v = params.variance();
    const double h = stat.high;
    const double c = stat.close;
    const double r = 2.0 * h - c;
    const double p = 2.0 * r / v * phi(r, v);
    if (t < detail::kEndpointGuard) return {p, 0.0, 0.0};
    if (1.0 - t < detail::kEndpointGuard) return {p, c * p, c * c * p};

    const double st2 = params.bridge_variance(t);
    const double k = 1.0 / (std::numbers::sqrt2 * std::sqrt(st2));
    const double phi_c = phi(c, v);
    const double phi_r = phi(r, v);
    const double e_hi = std::erf((h - r * t) * k);
    const double e_lo = 1.0 + std::erf((c * t - h) * k);
    const double ph = phi(h - r * t, st2);

    const double p_hrt = (1.0 - 2.0 * t) + 2.0 * r * (r * t - h) / v;
    MomentTriple m;
    m.m0 = p;
    m.m1 = phi_c * e_lo + phi_r * (2.0 * h * r / v - 1.0 + p_hrt * e_hi) -
           4.0 * r * t * (1.0 - t) * phi_r * ph;

    const double q1 = -(r * t * t + (1.0 - t) * (2.0 * h - r * t)) +
                      r * (h * h + (h - r * t) * (h - r * t)) / v;
    const double q2 = (2.0 * h * (1.0 - t) - r * t) + 2.0 * h * r * (r * t - h) / v;
    m.m2 = 2.0 * (2.0 * h - c * t) * phi_c * e_lo +
           2.0 * phi_r * ((r * t * (1.0 - t) + q1 + q2 * e_hi) - 4.0 * r * h * t * (1.0 - t) * ph);

#ifndef NDEBUG
    const MomentTriple alt = moments_ch_termwise(t, stat, params);
    const double scale = std::abs(p) + std::abs(phi_c) + std::abs(phi_r);
    assert(std::abs(alt.m1 - m.m1) <= 1e-8 * (1.0 + h) * scale);
    assert(std::abs(alt.m2 - m.m2) <= 1e-8 * (1.0 + h * h) * scale);
#endif
    return m;
}

namespace {

// Moments divided by psi_2 = phi_{sigma^2}(2h - c), from the term-by-term
// integration of -d/dh of the four-Gaussian generator over (-inf, h].
MomentTriple scaled_moments_ch(double t, double h, double c, const ModelParams& params) {
    const double v = params.variance();
    const double r = 2.0 * h - c;
    const double st2 = params.bridge_variance(t);
    const double s = std::sqrt(st2);
    const double z = h - r * t;
    const double cdf_p = std_normal_cdf(z / s);
    const double cdf_m = std_normal_cdf(-z / s);
    const double dens = phi(z, st2);

    const double mu2 = r * t;
    const double mu3 = 2.0 * h - r * t;
    const double mu4 = 2.0 * h - c * t;
    const double i0_2 = cdf_p;
    const double i1_2 = mu2 * cdf_p - st2 * dens;
    const double i2_2 = (mu2 * mu2 + st2) * cdf_p - st2 * (h + mu2) * dens;
    const double i0_3 = cdf_m;
    const double i1_3 = mu3 * cdf_m - st2 * dens;
    const double i2_3 = (mu3 * mu3 + st2) * cdf_m - st2 * (h + mu3) * dens;
    // psi_4 / psi_2 times the half-line integrals of the fourth Gaussian.
    const double y = (h - c * t) / (std::numbers::sqrt2 * s);
    const double k0 = 0.5 * erfcx(y) * std::sqrt(2.0 * std::numbers::pi) * s * dens;
    const double k1 = mu4 * k0 - st2 * dens;

    const double w = 2.0 * r / v;
    const double tau2 = 2.0 * t;
    const double tau3 = 2.0 * (1.0 - t);
    MomentTriple m;
    m.m0 = w;
    m.m1 = -(tau2 * i0_2 - w * i1_2) - (tau3 * i0_3 - w * i1_3) + 2.0 * k0;
    m.m2 = -(2.0 * tau2 * i1_2 - w * i2_2) - (2.0 * tau3 * i1_3 - w * i2_3) + 4.0 * k1;
    return m;
}

}  // namespace

MomentTriple moments_ch_termwise(double t, const HighCloseStat& stat, const ModelParams& params) {
    params.validate();
    stat.validate();
    check_time(t, "moments_ch_termwise");
    const double r = 2.0 * stat.high - stat.close;
    const double psi2 = phi(r, params.variance());
    if (t < detail::kEndpointGuard || 1.0 - t < detail::kEndpointGuard) {
        const double p = 2.0 * r / params.variance() * psi2;
        const double x = t < 0.5 ? 0.0 : stat.close;
        return {p, x * p, x * x * p};
    }
    MomentTriple m = scaled_moments_ch(t, stat.high, stat.close, params);
    m.m0 *= psi2;
    m.m1 *= psi2;
    m.m2 *= psi2;
    return m;
}

MeanVariance conditional_moments_ch(double t, const HighCloseStat& stat, const ModelParams& params) {
    params.validate();
    stat.validate();
    check_time(t, "conditional_moments_ch");
    if (t < detail::kEndpointGuard) return {0.0, 0.0};
    if (1.0 - t < detail::kEndpointGuard) return {stat.close, 0.0};
    const double v = params.variance();
    const double st2 = params.bridge_variance(t);
    if (2.0 * stat.high - stat.close < detail::kDegenerateOffset * params.sigma) {
        // Path confined below its start and end: a negative excursion.
        const double st = std::sqrt(st2);
        return {-2.0 * std::sqrt(2.0 / std::numbers::pi) * st, (3.0 - 8.0 / std::numbers::pi) * st2};
    }
    const MomentTriple m = scaled_moments_ch(t, stat.high, stat.close, params);
    MeanVariance out;
    out.mean = std::min(m.m1 / m.m0, stat.high);
    out.variance = detail::finish_variance(m.m2 / m.m0 - out.mean * out.mean, v);
    return out;
}

ConditionalCurve conditional_curve_ch(const HighCloseStat& stat, const ModelParams& params,
                                      std::span<const double> grid) {
    ConditionalCurve curve;
    curve.time.assign(grid.begin(), grid.end());
    curve.mean.reserve(grid.size());
    curve.variance.reserve(grid.size());
    for (double t : grid) {
        const MeanVariance mv = conditional_moments_ch(t, stat, params);
        curve.mean.push_back(mv.mean);
        curve.variance.push_back(mv.variance);
    }
    return curve;
}

double density_given_high(double x, double t, double h, const ModelParams& params) {
    params.validate();
    if (!(t > 0.0 && t < 1.0)) throw DomainError("density_given_high: t must lie in (0, 1)");
    if (!(h >= 0.0)) throw DomainError("density_given_high: requires h >= 0");
    if (!(x <= h)) throw DomainError("density_given_high: requires x <= h");
    const double v = params.variance();
    const double vl = t * v;
    const double vr = (1.0 - t) * v;
    const double m = 2.0 * h - x;
    const double below = phi(x, vl) - phi(m, vl);
    const double first_hit = 2.0 * m / vl * phi(m, vl);
    const double out = below * 2.0 * phi(h - x, vr) +
                       first_hit * std::erf((h - x) / (std::numbers::sqrt2 * std::sqrt(vr)));
    return std::max(0.0, out);
}

MomentTriple moments_given_high(double t, double h, const ModelParams& params,
                                const QuadratureControl& quad) {
    params.validate();
    if (!(t > 0.0 && t < 1.0)) throw DomainError("moments_given_high: t must lie in (0, 1)");
    if (!(h >= 0.0)) throw DomainError("moments_given_high: requires h >= 0");
    // The density is negligible more than 40 sigma below the high.
    const double lo = std::min(0.0, h) - 40.0 * params.sigma;
    MomentTriple m;
    for (int k = 0; k < 3; ++k) {
        auto f = [&, k](double x) { return std::pow(x, k) * density_given_high(x, t, h, params); };
        // Split at 0 and near h where the density has its sharpest features.
        const double mid = std::max(lo, h - 4.0 * params.sigma * std::sqrt(1.0 - t));
        double val = integrate(f, lo, mid, quad) + integrate(f, mid, h, quad);
        (k == 0 ? m.m0 : k == 1 ? m.m1 : m.m2) = val;
    }
    return m;
}

ConditionalCurve conditional_curve_given_high(double h, const ModelParams& params,
                                              std::span<const double> grid,
                                              const QuadratureControl& quad) {
    ConditionalCurve curve;
    for (double t : grid) {
        double mean = 0.0;
        double var = 0.0;
        if (t < detail::kEndpointGuard) {
        } else if (1.0 - t < detail::kEndpointGuard) {
            const CloseGivenHigh cg = close_given_high_moments(h, params);
            mean = cg.mean;
            var = cg.variance;
        } else {
            const MomentTriple m = moments_given_high(t, h, params, quad);
            mean = m.m1 / m.m0;
            var = detail::finish_variance(m.m2 / m.m0 - mean * mean, params.variance());
        }
        curve.time.push_back(t);
        curve.mean.push_back(mean);
        curve.variance.push_back(var);
    }
    return curve;
}

}  // namespace condbm
