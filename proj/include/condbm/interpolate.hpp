#pragma once

#include <optional>
#include <string>
#include <vector>

#include "condbm/ohlc.hpp"
#include "condbm/volatility.hpp"

// Per-bar conditional mean/variance curves from OHLC statistics.
namespace condbm {

enum class InterpMethod { Bridge, CloseHigh, CloseHighLow };

std::string interp_method_name(InterpMethod m);
InterpMethod parse_interp_method(const std::string& name);

struct InterpolationConfig {
    InterpMethod method = InterpMethod::CloseHighLow;
    VolMethod sigma = VolMethod::GarmanKlass;
    std::optional<double> known_sigma_sq;  // overrides the estimator when set
    int grid = 100;  // wall-clock points t_i = i / grid
    std::optional<VolTimeMap> voltime;  // tau over a uniform t grid with as many intervals
    std::vector<double> voltime_t;  // t column of the map (empty: uniform)
    bool parallel = true;
};

struct BarCurve {
    std::string id;
    VolEstimate sigma;
    std::string sigma_note;  // fallback chain when the requested estimator failed
    std::vector<double> t, tau, mean, variance;
    std::string error;  // per-bar failure; curves are empty when set
};

struct InterpolationResult {
    std::vector<BarCurve> bars;
    std::vector<std::string> warnings;
    std::size_t failures() const;
};

// tau at wall time t from a map sampled at t_grid (linear interpolation).
double map_time(const VolTimeMap& map, const std::vector<double>& t_grid, double t);

InterpolationResult interpolate(const std::vector<OhlcBar>& bars, const InterpolationConfig& config);

// One row per (bar, t): bar_id,t,tau,mean,variance,sigma_sq,method.
std::string emit_curves_csv(const InterpolationResult& result, const InterpolationConfig& config);
std::string emit_curves_json(const InterpolationResult& result, const InterpolationConfig& config);

}  // namespace condbm
