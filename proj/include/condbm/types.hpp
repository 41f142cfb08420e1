#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "condbm/error.hpp"

namespace condbm {

// Positive, finite variance (squared price units).
class Variance {
public:
    explicit Variance(double value) : value_(value) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw DomainError("variance must be positive and finite");
    }
    double value() const noexcept { return value_; }
    double stddev() const noexcept { return std::sqrt(value_); }

private:
    double value_;
};

struct ModelParams {
    double sigma = 1.0;  // diffusion scale; Var[B(1)] = sigma^2

    double variance() const noexcept { return sigma * sigma; }
    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw DomainError("sigma must be positive and finite");
    }
    // sigma_t^2 = sigma^2 t (1 - t)
    double bridge_variance(double t) const noexcept { return sigma * sigma * t * (1.0 - t); }
};

// Truncation of the reflection series (k-sums over images of the barriers).
struct SeriesControl {
    int max_terms = 1000;
    double tail_tolerance = 1e-12;

    void validate() const {
        if (max_terms < 1) throw DomainError("max_terms must be >= 1");
        if (!(tail_tolerance > 0.0)) throw DomainError("tail_tolerance must be > 0");
    }
};

struct QuadratureControl {
    double abs_tolerance = 1e-14;
    double rel_tolerance = 1e-11;
    unsigned max_depth = 20;
};

// Unnormalized moments M_m = \int x^m p(x, t, stats) dx, m = 0, 1, 2.
struct MomentTriple {
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;

    double mean() const { return m1 / m0; }
    double variance() const {
        const double mu = m1 / m0;
        return m2 / m0 - mu * mu;
    }
};

struct MeanVariance {
    double mean = 0.0;
    double variance = 0.0;
};

// Conditional mean/variance of B(t) over a time grid.
struct ConditionalCurve {
    std::vector<double> time;
    std::vector<double> mean;
    std::vector<double> variance;

    std::size_t size() const noexcept { return time.size(); }
};

struct HighCloseStat {
    double high = 0.0;
    double close = 0.0;

    void validate() const {
        if (!(high >= 0.0) || !(high >= close) || !std::isfinite(high) || !std::isfinite(close))
            throw DomainError("high/close statistic requires high >= 0 and high >= close");
    }
};

struct HighLowCloseStat {
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;

    double range() const noexcept { return high - low; }
    void validate() const {
        if (!std::isfinite(high) || !std::isfinite(low) || !std::isfinite(close))
            throw DomainError("high/low/close must be finite");
        if (!(low <= 0.0 && 0.0 <= high)) throw DomainError("statistic requires low <= 0 <= high");
        if (!(low <= close && close <= high)) throw DomainError("statistic requires low <= close <= high");
        if (!(high - low > 0.0)) throw DomainError("statistic requires a positive range");
    }
};

// Uniform grid of n+1 points on [0, 1].
std::vector<double> uniform_grid(int n);
// Grid refined near both endpoints: t_i = (1 - cos(pi i / n)) / 2.
std::vector<double> cosine_grid(int n);

// Trapezoidal time average of values sampled on a grid spanning [0, 1].
double time_average(std::span<const double> time, std::span<const double> values);

}  // namespace condbm
