#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbm/ohlc.hpp"
#include "condbm/types.hpp"

// Variance estimators from OHLC statistics, the volatility-time transform and
// the weighted interpolation scores.
namespace condbm {

enum class VolMethod { Const, GarmanKlass, MaxLikelihood };

std::string vol_method_name(VolMethod m);
VolMethod parse_vol_method(const std::string& name);

struct VolEstimate {
    double sigma_sq = 0.0;
    VolMethod method = VolMethod::Const;
    int iterations = 0;
};

// Mean of squared log closes.
VolEstimate sigma_const(std::span<const OhlcBar> bars);

struct GarmanKlassConstants {
    double k1 = 0.511, k2 = 0.019, k3 = 0.383;
};
// Throws DataError when the quadratic form is not positive.
VolEstimate sigma_garman_klass(const HighLowCloseStat& stat, const GarmanKlassConstants& k = {});

struct Bracket {
    double lo = 0.0, hi = 0.0;  // sigma^2
};
// Maximizes log p(h, l, c; sigma^2) by golden section in log sigma^2. Default
// bracket is [0.01, 100] times the Garman-Klass value (range^2 / 2 when that
// is not positive). Throws BracketError when the optimum sits on the bracket.
VolEstimate sigma_max_likelihood(const HighLowCloseStat& stat, std::optional<Bracket> bracket = {},
                                 double rel_tolerance = 1e-8);

struct VolTimeMap {
    std::vector<double> sigma_sq;  // per slot i = 1..N (index 0 unused, 0)
    std::vector<double> tau;  // tau[0] = 0, tau[N] = 1
    double total = 0.0;  // sum of sigma_sq
};

// days: one row per day, one column per time slot t_0..t_N. lag in slots.
// Throws DataError on ragged rows or non-finite entries.
VolTimeMap estimate_vol_time(const std::vector<std::vector<double>>& days, int lag = 1);
// Builds a map from explicit (t, tau) pairs; both must be nondecreasing and
// tau must end at 1.
VolTimeMap vol_time_from_pairs(std::span<const double> t, std::span<const double> tau);

struct Scores {
    double mse = 0.0;
    double rmse = 0.0;
    double mrse = 0.0;
};

// Accumulates weighted squared errors over days. mse divides by the number of
// terms, rmse normalizes by the weighted signal energy over all days, mrse is
// the mean over days of the per-day relative error.
class ScoreAccumulator {
public:
    void add_day(std::span<const double> x, std::span<const double> estimate, std::span<const double> weight);
    Scores result() const;
    std::size_t days() const { return days_; }

private:
    double err_ = 0.0;
    double energy_ = 0.0;
    double rel_sum_ = 0.0;
    std::size_t terms_ = 0;
    std::size_t days_ = 0;
};

Scores score(std::span<const double> x, std::span<const double> estimate, std::span<const double> weight);

}  // namespace condbm
