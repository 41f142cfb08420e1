#include "condbm/high_low_close.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

#include "condbm/close_high.hpp"
#include "condbm/extrema.hpp"
#include "condbm/gaussian.hpp"
#include "condbm/quadrature.hpp"
#include "series.hpp"

namespace condbm {

using detail::phi;

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr int kMaxWindow = 200;
// Terms whose log-magnitude falls this far below the largest are dropped.
constexpr double kPruneLog = 50.0;
// Offset (in sigma) applied when a statistic sits exactly on a boundary of
// its domain, where p(h, l, c) vanishes.
constexpr double kBoundaryOffset = 1e-5;

void require_interior_time(double t, const char* what) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError(std::string(what) + ": t must lie in (0, 1)");
}

// Interval mass P(lo <= Z <= hi), Z ~ N(0, s^2), returned as m * exp(-expo).
double scaled_interval_mass(double lo, double hi, double s, double& expo) {
    const double k = 1.0 / (std::numbers::sqrt2 * s);
    if (lo >= 0.0 || hi <= 0.0) {
        const double near = (lo >= 0.0 ? lo : -hi) * k;
        const double far = (lo >= 0.0 ? hi : -lo) * k;
        expo = near * near;
        return 0.5 * (erfcx(near) - erfcx(far) * std::exp(near * near - far * far));
    }
    expo = 0.0;
    return 0.5 * (std::erf(hi * k) - std::erf(lo * k));
}

double distance_to_interval(double x, double lo, double hi) {
    return x < lo ? lo - x : (x > hi ? x - hi : 0.0);
}

struct ScaledMoments {
    MomentTriple m;  // true moments are m * exp(-log_scale)
    double log_scale = 0.0;
    double m0_magnitude = 0.0;  // sum of |contributions| to m0, same scaling
};

ScaledMoments scaled_moments_chl(double t, const HighLowCloseStat& stat, const ModelParams& params,
                                 int window) {
    const double h = stat.high;
    const double l = stat.low;
    const double sigma = params.sigma;
    const double st2 = params.bridge_variance(t);
    const double s = std::sqrt(st2);

    struct Entry {
        SeriesTermIJK term;
        double logw;
    };
    std::vector<Entry> entries;
    entries.reserve(4 * (2 * window + 1) * (2 * window + 1));
    double best = -std::numeric_limits<double>::infinity();
    for (int j = -window; j <= window; ++j)
        for (int k = -window; k <= window; ++k)
            for (int i = 1; i <= 4; ++i) {
                SeriesTermIJK term = make_series_term(i, j, k, t, stat, params);
                const double d = distance_to_interval(term.mu, l, h);
                const double logw = -term.g - d * d / (2.0 * st2);
                best = std::max(best, logw);
                entries.push_back({term, logw});
            }

    ScaledMoments out;
    out.log_scale = -best;
    const double shift = -best;
    for (const Entry& en : entries) {
        if (en.logw < best - kPruneLog) continue;
        const SeriesTermIJK& term = en.term;
        const MomentCoefficients co = moment_coefficients(term, t, stat, params);
        const double zh = h - term.mu;
        const double zl = l - term.mu;
        const double dens_h = std::exp(-term.g - zh * zh / (2.0 * st2) + shift) / (kSqrt2Pi * sigma * kSqrt2Pi * s);
        const double dens_l = std::exp(-term.g - zl * zl / (2.0 * st2) + shift) / (kSqrt2Pi * sigma * kSqrt2Pi * s);
        double expo = 0.0;
        const double mass = scaled_interval_mass(zl, zh, s, expo);
        const double r = mass * std::exp(-term.g - expo + shift) / (kSqrt2Pi * sigma);
        double vals[3];
        for (int m = 0; m < 3; ++m) vals[m] = term.sign * (co.a[m] * dens_h - co.a_hat[m] * dens_l + co.e[m] * r);
        out.m.m0 += vals[0];
        out.m.m1 += vals[1];
        out.m.m2 += vals[2];
        out.m0_magnitude += std::abs(vals[0]);
    }
    return out;
}

HighLowCloseStat nudge_off_boundary(const HighLowCloseStat& stat, double sigma) {
    HighLowCloseStat s = stat;
    const double eps = kBoundaryOffset * sigma;
    const double top = std::max(0.0, s.close);
    const double bottom = std::min(0.0, s.close);
    if (s.high - top < eps) s.high = top + eps;
    if (bottom - s.low < eps) s.low = bottom - eps;
    return s;
}

struct BarrierPart {
    double q = 0.0, d_h = 0.0, d_l = 0.0, d_hl = 0.0;
    void add(double sign, double u, double w, double alpha, double beta) {
        const double f = phi(u, w);
        const double uw = u / w;
        q += sign * f;
        d_h += sign * (-alpha * uw * f);
        d_l += sign * (-beta * uw * f);
        d_hl += sign * alpha * beta * (uw * uw - 1.0 / w) * f;
    }
};

// Sums the barrier series group by group until all four components settle.
template <class Group>
BarrierSeries sum_barrier_groups(Group&& group, const SeriesControl& ctrl, const char* what) {
    BarrierPart total;
    double peak[4] = {0, 0, 0, 0};
    int small = 0;
    for (int n = 0; n < ctrl.max_terms; ++n) {
        BarrierPart g;
        group(n, g);
        total.q += g.q;
        total.d_h += g.d_h;
        total.d_l += g.d_l;
        total.d_hl += g.d_hl;
        const double gv[4] = {g.q, g.d_h, g.d_l, g.d_hl};
        const double tv[4] = {total.q, total.d_h, total.d_l, total.d_hl};
        bool all_small = n >= 1;
        for (int c = 0; c < 4; ++c) {
            peak[c] = std::max(peak[c], std::abs(gv[c]));
            if (std::abs(gv[c]) > ctrl.tail_tolerance * std::max(peak[c], std::abs(tv[c]))) all_small = false;
        }
        small = all_small ? small + 1 : 0;
        if (small >= 2) return {total.q, total.d_h, total.d_l, total.d_hl};
    }
    throw TruncationError(std::string(what) + ": series did not converge within max_terms",
                          ctrl.max_terms, std::abs(total.q));
}

}  // namespace

double SeriesTermIJK::psi(double sigma) const { return std::exp(-g) / (kSqrt2Pi * sigma); }

SeriesTermIJK make_series_term(int i, int j, int k, double t, const HighLowCloseStat& stat,
                               const ModelParams& params, Centering centering) {
    const double h = stat.high;
    const double l = stat.low;
    const double c = stat.close;
    const double range = h - l;
    const double jj = j;
    const double kk = k;
    // Each endpoint is linear in (h, l): value, d/dh, d/dl.
    struct Lin {
        double v, dh, dl;
    };
    const bool upper = centering == Centering::Upper;
    const double base = upper ? h : l;
    const Lin a_near{2.0 * jj * range, 2.0 * jj, -2.0 * jj};
    const Lin a_far = upper ? Lin{2.0 * base - 2.0 * jj * range, 2.0 - 2.0 * jj, 2.0 * jj}
                            : Lin{2.0 * base - 2.0 * jj * range, -2.0 * jj, 2.0 + 2.0 * jj};
    const Lin b_near{c - 2.0 * kk * range, -2.0 * kk, 2.0 * kk};
    const Lin b_far = upper ? Lin{2.0 * base - c + 2.0 * kk * range, 2.0 + 2.0 * kk, -2.0 * kk}
                            : Lin{2.0 * base - c + 2.0 * kk * range, 2.0 * kk, 2.0 - 2.0 * kk};
    Lin a{}, b{};
    SeriesTermIJK term;
    switch (i) {
        case 1: a = a_near; b = b_near; term.sign = 1; break;
        case 2: a = a_near; b = b_far; term.sign = -1; break;
        case 3: a = a_far; b = b_near; term.sign = -1; break;
        case 4: a = a_far; b = b_far; term.sign = 1; break;
        default: throw DomainError("make_series_term: i must be 1..4");
    }
    const double v = params.variance();
    term.i = i;
    term.j = j;
    term.k = k;
    term.a = a.v;
    term.b = b.v;
    term.mu = a.v * (1.0 - t) + b.v * t;
    term.tau = a.dh * (1.0 - t) + b.dh * t;
    term.tau_hat = a.dl * (1.0 - t) + b.dl * t;
    const double d = a.v - b.v;
    const double d_h = a.dh - b.dh;
    const double d_l = a.dl - b.dl;
    term.g = d * d / (2.0 * v);
    term.g_h = d * d_h / v;
    term.g_l = d * d_l / v;
    term.g_hl = d_h * d_l / v;
    return term;
}

IndexCombos index_combos(int j, int k, double t) {
    return {2.0 * (j * (1.0 - t) + k * t), 2.0 * (j * (1.0 - t) - k * t), 2.0 * (j + k), 2.0 * (j - k)};
}

MomentCoefficients moment_coefficients(const SeriesTermIJK& term, double t,
                                       const HighLowCloseStat& stat, const ModelParams& params) {
    const double st2 = params.bridge_variance(t);
    const double h = stat.high;
    const double l = stat.low;
    const double mu = term.mu;
    MomentCoefficients co;
    co.A = term.tau * term.tau_hat;
    co.B = term.tau * term.g_l + term.tau_hat * term.g_h;
    co.Gamma = -term.g_h * term.g_l + term.g_hl;
    co.C = co.Gamma + co.A / st2;
    co.e[0] = co.Gamma;
    co.a[1] = co.a_hat[1] = co.A - co.Gamma * st2;
    co.e[1] = co.B + co.Gamma * mu;
    co.a[2] = 2.0 * h * co.A - 2.0 * co.B * st2 - co.Gamma * st2 * (mu + h);
    co.a_hat[2] = 2.0 * l * co.A - 2.0 * co.B * st2 - co.Gamma * st2 * (mu + l);
    co.e[2] = 2.0 * co.B * mu - 2.0 * co.A + co.Gamma * (mu * mu + st2);
    return co;
}

double series_polynomial(const SeriesTermIJK& term, double z, double t, const ModelParams& params) {
    const double st2 = params.bridge_variance(t);
    const double A = term.tau * term.tau_hat;
    const double B = term.tau * term.g_l + term.tau_hat * term.g_h;
    const double Gamma = -term.g_h * term.g_l + term.g_hl;
    return -A * z * z / (st2 * st2) + B * z / st2 + Gamma + A / st2;
}

int truncation_window(double range, double sigma, double tail_tolerance) {
    if (!(range > 0.0)) throw DomainError("truncation_window: range must be positive");
    if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0))
        throw DomainError("truncation_window: tolerance must lie in (0, 1)");
    const double j = std::ceil(sigma / range * std::sqrt(-std::log(tail_tolerance) / 2.0)) + 1.0;
    return j > 1e6 ? 1000000 : static_cast<int>(j);
}

BarrierSeries barrier_series(double x, double t, double high, double low, const ModelParams& params,
                             const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("barrier_series: t must lie in (0, 1]");
    if (!(low < 0.0 && 0.0 < high)) throw DomainError("barrier_series: requires low < 0 < high");
    if (x < low || x > high) return {};
    const double w = t * params.variance();
    const double range = high - low;
    auto group = [&](int n, BarrierPart& g) {
        for (int j : {n, -n}) {
            const double jj = j;
            g.add(1.0, x - 2.0 * jj * range, w, -2.0 * jj, 2.0 * jj);
            g.add(-1.0, x - 2.0 * high + 2.0 * jj * range, w, 2.0 * jj - 2.0, -2.0 * jj);
            if (n == 0) break;
        }
    };
    return sum_barrier_groups(group, ctrl, "barrier_series");
}

BarrierSeries barrier_series_reverse(double x, double t, const HighLowCloseStat& stat,
                                     const ModelParams& params, const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    stat.validate();
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("barrier_series_reverse: t must lie in [0, 1)");
    if (x < stat.low || x > stat.high) return {};
    const double w = (1.0 - t) * params.variance();
    const double h = stat.high;
    const double c = stat.close;
    const double range = stat.range();
    auto group = [&](int n, BarrierPart& g) {
        for (int k : {n, -n}) {
            const double kk = k;
            g.add(1.0, x - c + 2.0 * kk * range, w, 2.0 * kk, -2.0 * kk);
            g.add(-1.0, x - 2.0 * h + c - 2.0 * kk * range, w, -2.0 - 2.0 * kk, 2.0 * kk);
            if (n == 0) break;
        }
    };
    return sum_barrier_groups(group, ctrl, "barrier_series_reverse");
}

double barrier_series_Q(double x, double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl) {
    if (!(x >= low && x <= high)) throw DomainError("barrier_series_Q: requires low <= x <= high");
    return std::max(0.0, barrier_series(x, t, high, low, params, ctrl).q);
}

double generator_G(double x, double t, const HighLowCloseStat& stat, const ModelParams& params,
                   const SeriesControl& ctrl) {
    stat.validate();
    require_interior_time(t, "generator_G");
    if (!(x >= stat.low && x <= stat.high)) throw DomainError("generator_G: requires low <= x <= high");
    const double q = barrier_series(x, t, stat.high, stat.low, params, ctrl).q;
    const double qr = barrier_series_reverse(x, t, stat, params, ctrl).q;
    return std::max(0.0, q * qr);
}

double generator_G_series(double x, double t, const HighLowCloseStat& stat, const ModelParams& params,
                          const SeriesControl& ctrl) {
    params.validate();
    stat.validate();
    require_interior_time(t, "generator_G_series");
    if (!(x >= stat.low && x <= stat.high)) throw DomainError("generator_G_series: requires low <= x <= high");
    const int window = truncation_window(stat.range(), params.sigma, ctrl.tail_tolerance);
    if (window > kMaxWindow) throw TruncationError("generator_G_series: window too large", window, std::nan(""));
    const double st2 = params.bridge_variance(t);
    double sum = 0.0;
    for (int j = -window; j <= window; ++j)
        for (int k = -window; k <= window; ++k)
            for (int i = 1; i <= 4; ++i) {
                const SeriesTermIJK term = make_series_term(i, j, k, t, stat, params);
                sum += term.sign * term.psi(params.sigma) * phi(x - term.mu, st2);
            }
    return std::max(0.0, sum);
}

double joint_density_chl(double x, double t, const HighLowCloseStat& stat, const ModelParams& params,
                         const SeriesControl& ctrl) {
    stat.validate();
    require_interior_time(t, "joint_density_chl");
    if (x < stat.low || x > stat.high) return 0.0;
    const BarrierSeries q = barrier_series(x, t, stat.high, stat.low, params, ctrl);
    const BarrierSeries r = barrier_series_reverse(x, t, stat, params, ctrl);
    return -(q.q * r.d_hl + q.d_h * r.d_l + q.d_l * r.d_h + q.d_hl * r.q);
}

double conditional_density_chl(double x, double t, const HighLowCloseStat& stat,
                               const ModelParams& params, const SeriesControl& ctrl) {
    params.validate();
    stat.validate();
    require_interior_time(t, "conditional_density_chl");
    if (x < stat.low || x > stat.high) throw DomainError("conditional_density_chl: requires low <= x <= high");
    const double p = density_hlc(stat, params, ctrl);
    if (p < 1e-300) throw UnderflowError("conditional_density_chl: p(h, l, c) underflows", p);
    const int window = truncation_window(stat.range(), params.sigma, ctrl.tail_tolerance);
    if (window > kMaxWindow) throw TruncationError("conditional_density_chl: window too large", window, std::nan(""));
    const double st2 = params.bridge_variance(t);
    double sum = 0.0;
    for (int j = -window; j <= window; ++j)
        for (int k = -window; k <= window; ++k)
            for (int i = 1; i <= 4; ++i) {
                const SeriesTermIJK term = make_series_term(i, j, k, t, stat, params);
                const double z = x - term.mu;
                sum += term.sign * term.psi(params.sigma) * series_polynomial(term, z, t, params) * phi(z, st2);
            }
    return std::max(0.0, sum / p);
}

MomentTriple moments_chl(double t, const HighLowCloseStat& stat, const ModelParams& params,
                         const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    stat.validate();
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("moments_chl: t must lie in [0, 1]");
    if (t < detail::kEndpointGuard || 1.0 - t < detail::kEndpointGuard) {
        const double p = density_hlc(stat, params, ctrl);
        const double x = t < 0.5 ? 0.0 : stat.close;
        return {p, x * p, x * x * p};
    }
    const int window = truncation_window(stat.range(), params.sigma, ctrl.tail_tolerance);
    if (window > kMaxWindow) return quadrature_moments_chl(t, stat, params, ctrl);
    const ScaledMoments sm = scaled_moments_chl(t, stat, params, window);
    const double f = std::exp(-sm.log_scale);
    return {sm.m.m0 * f, sm.m.m1 * f, sm.m.m2 * f};
}

MomentTriple moments_chl_collapsed(double t, const HighLowCloseStat& stat, const ModelParams& params,
                                   const SeriesControl& ctrl) {
    params.validate();
    stat.validate();
    require_interior_time(t, "moments_chl_collapsed");
    const int window = truncation_window(stat.range(), params.sigma, ctrl.tail_tolerance);
    if (window > kMaxWindow) throw TruncationError("moments_chl_collapsed: window too large", window, std::nan(""));
    const double h = stat.high;
    const double l = stat.low;
    const double st2 = params.bridge_variance(t);
    const double s = std::sqrt(st2);
    MomentTriple m;
    for (int j = -window; j <= window; ++j)
        for (int k = -window; k <= window; ++k) {
            SeriesTermIJK up[4], lo[4];
            for (int i = 0; i < 4; ++i) {
                up[i] = make_series_term(i + 1, j, k, t, stat, params, Centering::Upper);
                lo[i] = make_series_term(i + 1, j, k, t, stat, params, Centering::Lower);
            }
            auto gamma = [](const SeriesTermIJK& x) { return -x.g_h * x.g_l + x.g_hl; };
            const AggregateCoefficients agg = aggregate_coefficients_closed(j, k, t, stat, params);
            const double dg = gamma(up[1]) - gamma(up[0]);
            const double dg_l = gamma(lo[1]) - gamma(lo[0]);
            const double u1h = agg.A_bar + 2.0 * dg * st2;
            const double u1l = agg.A_bar_lower + 2.0 * dg_l * st2;
            const double u2h = 2.0 * h * agg.A_bar - 2.0 * st2 * agg.B_bar + 4.0 * h * st2 * dg;
            const double u2l = 2.0 * l * agg.A_bar_lower - 2.0 * st2 * agg.B_bar_lower + 4.0 * l * st2 * dg_l;
            const double psi1 = up[0].psi(params.sigma);
            const double f_h = psi1 * phi(h - up[0].mu, st2);
            const double f_l = psi1 * phi(l - up[0].mu, st2);
            m.m1 += u1h * f_h - u1l * f_l;
            m.m2 += u2h * f_h - u2l * f_l;
            for (int i = 0; i < 4; ++i) {
                const MomentCoefficients co = moment_coefficients(up[i], t, stat, params);
                const double r = up[i].sign * up[i].psi(params.sigma) * normal_interval_mass(l - up[i].mu, h - up[i].mu, s);
                m.m0 += co.e[0] * r;
                m.m1 += co.e[1] * r;
                m.m2 += co.e[2] * r;
            }
        }
    return m;
}

MomentTriple quadrature_moments_chl(double t, const HighLowCloseStat& stat, const ModelParams& params,
                                    const SeriesControl& ctrl, const QuadratureControl& quad) {
    params.validate();
    stat.validate();
    require_interior_time(t, "quadrature_moments_chl");
    MomentTriple m;
    double* out[3] = {&m.m0, &m.m1, &m.m2};
    // Split at the nearest-image centres so each panel is smooth and unimodal-ish.
    std::vector<double> cuts{stat.low, stat.high};
    const double mid = stat.close * t;
    if (mid > stat.low && mid < stat.high) cuts.insert(cuts.begin() + 1, mid);
    for (int k = 0; k < 3; ++k) {
        auto f = [&, k](double x) { return std::pow(x, k) * joint_density_chl(x, t, stat, params, ctrl); };
        double acc = 0.0;
        for (std::size_t p = 1; p < cuts.size(); ++p) acc += integrate(f, cuts[p - 1], cuts[p], quad);
        *out[k] = acc;
    }
    return m;
}

MeanVariance conditional_moments_chl(double t, const HighLowCloseStat& stat_in,
                                     const ModelParams& params, const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    stat_in.validate();
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("conditional_moments_chl: t must lie in [0, 1]");
    if (t < detail::kEndpointGuard) return {0.0, 0.0};
    if (1.0 - t < detail::kEndpointGuard) return {stat_in.close, 0.0};
    detail::require_resolvable_range(stat_in.range(), params.sigma, "conditional_moments_chl");
    const HighLowCloseStat stat = nudge_off_boundary(stat_in, params.sigma);
    const int window = truncation_window(stat.range(), params.sigma, ctrl.tail_tolerance);
    MomentTriple m;
    if (window > kMaxWindow) {
        m = quadrature_moments_chl(t, stat, params, ctrl);
        if (!(m.m0 > 0.0)) throw UnderflowError("conditional_moments_chl: zero normalization", m.m0);
    } else {
        const ScaledMoments sm = scaled_moments_chl(t, stat, params, window);
        if (!(sm.m.m0 > 1e-13 * sm.m0_magnitude))
            throw NumericError("conditional_moments_chl: normalization lost to cancellation",
                               sm.m.m0 / sm.m0_magnitude);
        m = sm.m;
    }
    MeanVariance out;
    out.mean = std::clamp(m.m1 / m.m0, stat_in.low, stat_in.high);
    out.variance = detail::finish_variance(m.m2 / m.m0 - out.mean * out.mean, params.variance());
    return out;
}

ConditionalCurve conditional_curve_chl(const HighLowCloseStat& stat, const ModelParams& params,
                                       std::span<const double> grid, const SeriesControl& ctrl) {
    ConditionalCurve curve;
    curve.time.assign(grid.begin(), grid.end());
    for (double t : grid) {
        const MeanVariance mv = conditional_moments_chl(t, stat, params, ctrl);
        curve.mean.push_back(mv.mean);
        curve.variance.push_back(mv.variance);
    }
    return curve;
}

namespace {

struct CloseMass {
    double s = 0.0, d_h = 0.0, d_l = 0.0, d_hl = 0.0;
};

// sum_k R_1k - R_2k and its barrier derivatives, close limits held fixed.
CloseMass close_mass_series(double x, double t, double high, double low, double upper, double lower,
                            const ModelParams& params, const SeriesControl& ctrl) {
    const double s = params.sigma * std::sqrt(1.0 - t);
    const double w = s * s;
    const double range = high - low;
    CloseMass total;
    double peak = 0.0;
    int small = 0;
    auto add = [&](CloseMass& g, double sign, double u, double alpha, double beta) {
        const double f = phi(u, w);
        g.s += sign * detail::half_erf(u, s);
        g.d_h += sign * alpha * f;
        g.d_l += sign * beta * f;
        g.d_hl += sign * (-alpha * beta * u / w * f);
    };
    for (int n = 0; n < ctrl.max_terms; ++n) {
        CloseMass g;
        for (int k : {n, -n}) {
            const double kk = k;
            const double a1 = -2.0 * kk;
            const double b1 = 2.0 * kk;
            add(g, 1.0, upper - x - 2.0 * kk * range, a1, b1);
            add(g, -1.0, lower - x - 2.0 * kk * range, a1, b1);
            const double a2 = -2.0 - 2.0 * kk;
            const double b2 = 2.0 * kk;
            add(g, -1.0, upper + x - 2.0 * high - 2.0 * kk * range, a2, b2);
            add(g, 1.0, lower + x - 2.0 * high - 2.0 * kk * range, a2, b2);
            if (n == 0) break;
        }
        total.s += g.s;
        total.d_h += g.d_h;
        total.d_l += g.d_l;
        total.d_hl += g.d_hl;
        const double mag = std::abs(g.s) + std::abs(g.d_h) + std::abs(g.d_l) + std::abs(g.d_hl);
        const double tot = std::abs(total.s) + std::abs(total.d_h) + std::abs(total.d_l) + std::abs(total.d_hl);
        peak = std::max(peak, mag);
        small = (n >= 1 && mag <= ctrl.tail_tolerance * std::max(peak, tot)) ? small + 1 : 0;
        if (small >= 2) return total;
    }
    throw TruncationError("distribution_hl: series did not converge within max_terms", ctrl.max_terms,
                          std::abs(total.s));
}

void check_hl_args(double x, double t, double high, double low, const char* what) {
    require_interior_time(t, what);
    if (!(low < 0.0 && 0.0 < high)) throw DomainError(std::string(what) + ": requires low < 0 < high");
    if (!(x >= low && x <= high)) throw DomainError(std::string(what) + ": requires low <= x <= high");
}

}  // namespace

double distribution_hl(double x, double t, double high, double low, double upper, double lower,
                       const ModelParams& params, const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    check_hl_args(x, t, high, low, "distribution_hl");
    const double q = barrier_series(x, t, high, low, params, ctrl).q;
    const CloseMass r = close_mass_series(x, t, high, low, upper, lower, params, ctrl);
    return std::max(0.0, q * r.s);
}

double distribution_hl(double x, double t, double high, double low, const ModelParams& params,
                       const SeriesControl& ctrl) {
    return distribution_hl(x, t, high, low, high, low, params, ctrl);
}

double joint_density_hl(double x, double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl) {
    params.validate();
    ctrl.validate();
    require_interior_time(t, "joint_density_hl");
    if (!(low < 0.0 && 0.0 < high)) throw DomainError("joint_density_hl: requires low < 0 < high");
    if (x < low || x > high) return 0.0;
    const BarrierSeries q = barrier_series(x, t, high, low, params, ctrl);
    const CloseMass r = close_mass_series(x, t, high, low, high, low, params, ctrl);
    return -(q.q * r.d_hl + q.d_h * r.d_l + q.d_l * r.d_h + q.d_hl * r.s);
}

double conditional_density_hl(double x, double t, double high, double low, const ModelParams& params,
                              const SeriesControl& ctrl) {
    check_hl_args(x, t, high, low, "conditional_density_hl");
    const double p = density_hl(high, low, params, ctrl);
    if (p < 1e-300) throw UnderflowError("conditional_density_hl: p(h, l) underflows", p);
    return std::max(0.0, joint_density_hl(x, t, high, low, params, ctrl) / p);
}

MomentTriple moments_hl(double t, double high, double low, const ModelParams& params,
                        const SeriesControl& ctrl, const QuadratureControl& quad) {
    check_hl_args(0.0, t, high, low, "moments_hl");
    detail::require_resolvable_range(high - low, params.sigma, "moments_hl");
    MomentTriple m;
    double* out[3] = {&m.m0, &m.m1, &m.m2};
    for (int k = 0; k < 3; ++k) {
        auto f = [&, k](double x) { return std::pow(x, k) * joint_density_hl(x, t, high, low, params, ctrl); };
        *out[k] = integrate(f, low, 0.0, quad) + integrate(f, 0.0, high, quad);
    }
    return m;
}

ConditionalCurve conditional_curve_hl(double high, double low, const ModelParams& params,
                                      std::span<const double> grid, const SeriesControl& ctrl,
                                      const QuadratureControl& quad) {
    ConditionalCurve curve;
    const double eps = kBoundaryOffset * params.sigma;
    const double h = std::max(high, eps);
    const double l = std::min(low, -eps);
    detail::require_resolvable_range(h - l, params.sigma, "conditional_curve_hl");
    for (double t : grid) {
        double mean = 0.0;
        double var = 0.0;
        if (t < detail::kEndpointGuard || 1.0 - t < detail::kEndpointGuard) {
            if (t > 0.5) {
                // Close given (high, low): moments of p(h, l, c) / p(h, l) in c.
                const HighLowCloseStat mid{h, l, 0.0};
                auto dens = [&](double c) {
                    HighLowCloseStat st = mid;
                    st.close = c;
                    return density_hlc(st, params, ctrl);
                };
                const double m0 = integrate(dens, l, h, quad);
                const double m1 = integrate([&](double c) { return c * dens(c); }, l, h, quad);
                const double m2 = integrate([&](double c) { return c * c * dens(c); }, l, h, quad);
                mean = m1 / m0;
                var = detail::finish_variance(m2 / m0 - mean * mean, params.variance());
            }
        } else {
            const MomentTriple m = moments_hl(t, h, l, params, ctrl, quad);
            if (!(m.m0 > 0.0)) throw UnderflowError("conditional_curve_hl: zero normalization", m.m0);
            mean = std::clamp(m.m1 / m.m0, l, h);
            var = detail::finish_variance(m.m2 / m.m0 - mean * mean, params.variance());
        }
        curve.time.push_back(t);
        curve.mean.push_back(mean);
        curve.variance.push_back(var);
    }
    return curve;
}

BoundaryResidual boundary_cancellation_check(double t, const HighLowCloseStat& stat,
                                             const ModelParams& params, int j, int k) {
    params.validate();
    stat.validate();
    require_interior_time(t, "boundary_cancellation_check");
    const double st2 = params.bridge_variance(t);
    BoundaryResidual res;
    res.scale = 1.0;
    for (Centering cen : {Centering::Upper, Centering::Lower}) {
        const double edge = cen == Centering::Upper ? stat.high : stat.low;
        // The summands underflow for large |j|, |k|; work relative to the
        // largest Gaussian factor at this edge.
        SeriesTermIJK terms[4];
        double expo[4];
        double top = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 4; ++i) {
            terms[i - 1] = make_series_term(i, j, k, t, stat, params, cen);
            const double d = edge - terms[i - 1].mu;
            expo[i - 1] = -terms[i - 1].g - 0.5 * d * d / st2;
            top = std::max(top, expo[i - 1]);
        }
        double sum = 0.0, mag = 0.0;
        for (int i = 0; i < 4; ++i) {
            const SeriesTermIJK& term = terms[i];
            const double A = term.tau * term.tau_hat;
            const double B = term.tau * term.g_l + term.tau_hat * term.g_h;
            const double f = std::exp(expo[i] - top);
            const double x1 = term.sign * A * (term.mu - edge) / st2 * f;
            const double x2 = term.sign * B * f;
            sum += x1 + x2;
            mag += std::abs(x1) + std::abs(x2);
        }
        (cen == Centering::Upper ? res.upper : res.lower) = mag > 0.0 ? sum / mag : 0.0;
    }
    return res;
}

AggregateCoefficients aggregate_coefficients_closed(int j, int k, double t, const HighLowCloseStat& stat,
                                                    const ModelParams& params) {
    const double jj = j;
    const double kk = k;
    const double v = params.variance();
    const double range = stat.range();
    const double tt = t * (1.0 - t);
    AggregateCoefficients a;
    a.A_bar = (32.0 * jj * kk + 8.0 * (jj - kk)) * tt;
    a.A_bar_lower = (32.0 * jj * kk - 8.0 * (jj - kk)) * tt;
    a.B_bar = (-32.0 * jj * kk * range - 8.0 * (stat.high - stat.close) * jj + 8.0 * stat.high * kk) / v;
    a.B_bar_lower = (32.0 * jj * kk * range + 8.0 * (stat.low - stat.close) * jj - 8.0 * stat.low * kk) / v;
    return a;
}

AggregateCoefficients aggregate_coefficients_summed(int j, int k, double t, const HighLowCloseStat& stat,
                                                    const ModelParams& params) {
    AggregateCoefficients a;
    for (int i = 1; i <= 4; ++i) {
        const SeriesTermIJK up = make_series_term(i, j, k, t, stat, params, Centering::Upper);
        const SeriesTermIJK lo = make_series_term(i, j, k, t, stat, params, Centering::Lower);
        a.A_bar += up.sign * up.tau * up.tau_hat;
        a.B_bar += up.sign * (up.tau * up.g_l + up.tau_hat * up.g_h);
        a.A_bar_lower += lo.sign * lo.tau * lo.tau_hat;
        a.B_bar_lower += lo.sign * (lo.tau * lo.g_l + lo.tau_hat * lo.g_h);
    }
    return a;
}

double helper_integral_G(int m, int n, double mu, double high, double low, double s) {
    if (m < 0 || n < 0) throw DomainError("helper_integral_G: orders must be nonnegative");
    if (!(s > 0.0)) throw DomainError("helper_integral_G: s must be positive");
    const double up = high - mu;
    const double lo = low - mu;
    const double w = s * s;
    const int top = m + n;
    // K_p = int_lo^up y^p phi_w(y) dy by the recursion from integration by parts.
    std::vector<double> K(top + 1, 0.0);
    K[0] = normal_interval_mass(lo, up, s);
    const double fl = phi(lo, w);
    const double fu = phi(up, w);
    if (top >= 1) K[1] = w * (fl - fu);
    for (int p = 2; p <= top; ++p)
        K[p] = (p - 1) * w * K[p - 2] + w * (std::pow(lo, p - 1) * fl - std::pow(up, p - 1) * fu);
    // (y + mu)^m y^n = sum_r C(m, r) mu^(m - r) y^(r + n)
    double out = 0.0;
    double binom = 1.0;
    for (int r = 0; r <= m; ++r) {
        out += binom * std::pow(mu, m - r) * K[r + n];
        binom = binom * (m - r) / (r + 1);
    }
    return out;
}

}  // namespace condbm
