#include "condbm/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace condbm {

namespace {

constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;

// Continued fraction for erfcx, valid and fast for x >= 3:
// erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
double erfcx_continued_fraction(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int n = 1; n < 200; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return kInvSqrtPi / f;
}

// exp(x^2) with the square split so the large part is exact.
double exp_square(double x) {
    const double hi = std::ldexp(std::trunc(std::ldexp(x, 20)), -20);
    const double lo = x - hi;
    return std::exp(hi * hi) * std::exp(lo * (2.0 * hi + lo));
}

}  // namespace

double gaussian_pdf(double x, Variance variance) {
    if (!std::isfinite(x)) throw DomainError("gaussian_pdf: x must be finite");
    return detail::phi(x, variance.value());
}

double scaled_erf(double x, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("scaled_erf: sigma must be positive");
    if (std::isnan(x)) throw DomainError("scaled_erf: x is NaN");
    return detail::half_erf(x, sigma);
}

double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x >= 3.0) return erfcx_continued_fraction(x);
    if (x >= 0.0) return exp_square(x) * std::erfc(x);
    if (x < -26.6) return std::numeric_limits<double>::infinity();
    return 2.0 * exp_square(x) - erfcx(-x);
}

double erfcx_product(double h, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("erfcx_product: sigma must be positive");
    if (!(h >= 0.0)) throw DomainError("erfcx_product: h must be nonnegative");
    if (std::isinf(h)) return 0.0;
    return erfcx(h / (std::numbers::sqrt2 * sigma));
}

double normal_interval_mass(double lo, double hi, double s) {
    if (!(hi > lo)) return 0.0;
    const double k = 1.0 / (std::numbers::sqrt2 * s);
    if (lo >= 0.0) return 0.5 * (std::erfc(lo * k) - std::erfc(hi * k));
    if (hi <= 0.0) return 0.5 * (std::erfc(-hi * k) - std::erfc(-lo * k));
    return 0.5 * (std::erf(hi * k) - std::erf(lo * k));
}

std::vector<double> uniform_grid(int n) {
    if (n < 1) throw DomainError("uniform_grid: need at least one interval");
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / n;
    t[n] = 1.0;
    return t;
}

std::vector<double> cosine_grid(int n) {
    if (n < 1) throw DomainError("cosine_grid: need at least one interval");
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) t[i] = 0.5 * (1.0 - std::cos(std::numbers::pi * i / n));
    t[0] = 0.0;
    t[n] = 1.0;
    return t;
}

double time_average(std::span<const double> time, std::span<const double> values) {
    if (time.size() != values.size() || time.size() < 2)
        throw DomainError("time_average: need matching sequences of length >= 2");
    double acc = 0.0;
    for (std::size_t i = 1; i < time.size(); ++i)
        acc += 0.5 * (time[i] - time[i - 1]) * (values[i] + values[i - 1]);
    return acc / (time.back() - time.front());
}

}  // namespace condbm
