#include "condbm/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "condbm/close_high.hpp"
#include "condbm/high_low_close.hpp"

namespace condbm {

std::string interp_method_name(InterpMethod m) {
    switch (m) {
        case InterpMethod::Bridge: return "bridge";
        case InterpMethod::CloseHigh: return "ch";
        case InterpMethod::CloseHighLow: return "chl";
    }
    return "";
}

InterpMethod parse_interp_method(const std::string& name) {
    if (name == "bridge") return InterpMethod::Bridge;
    if (name == "ch") return InterpMethod::CloseHigh;
    if (name == "chl") return InterpMethod::CloseHighLow;
    throw DomainError("unknown method: " + name);
}

std::size_t InterpolationResult::failures() const {
    return static_cast<std::size_t>(std::count_if(bars.begin(), bars.end(), [](const BarCurve& b) { return !b.error.empty(); }));
}

double map_time(const VolTimeMap& map, const std::vector<double>& t_grid, double t) {
    const std::size_t n = map.tau.size();
    if (t_grid.empty()) {
        const double x = t * static_cast<double>(n - 1);
        const auto i = std::min(static_cast<std::size_t>(x), n - 2);
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * map.tau[i] + w * map.tau[i + 1];
    }
    if (t <= t_grid.front()) return map.tau.front();
    if (t >= t_grid.back()) return map.tau.back();
    const auto it = std::upper_bound(t_grid.begin(), t_grid.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_grid.begin()) - 1;
    const double w = (t - t_grid[i]) / (t_grid[i + 1] - t_grid[i]);
    return (1.0 - w) * map.tau[i] + w * map.tau[i + 1];
}

namespace {

VolEstimate estimate_sigma(const OhlcBar& bar, const InterpolationConfig& config, const VolEstimate& batch_const,
                           std::string& note) {
    if (config.known_sigma_sq) return {*config.known_sigma_sq, config.sigma, 0};
    if (config.sigma == VolMethod::Const) return batch_const;
    if (config.sigma == VolMethod::MaxLikelihood) {
        try {
            return sigma_max_likelihood(bar.stat());
        } catch (const Error& e) {
            note = std::string("ml failed (") + e.what() + "), using gk";
        }
    }
    try {
        return sigma_garman_klass(bar.stat());
    } catch (const Error& e) {
        note += (note.empty() ? "" : "; ") + std::string("gk failed, using const");
    }
    return batch_const;
}

BarCurve interpolate_bar(const OhlcBar& bar, const InterpolationConfig& config, const VolEstimate& batch_const) {
    BarCurve out;
    out.id = bar.id;
    try {
        out.sigma = estimate_sigma(bar, config, batch_const, out.sigma_note);
        if (!(out.sigma.sigma_sq > 0.0)) throw NumericError("no positive variance estimate");
        const ModelParams params{std::sqrt(out.sigma.sigma_sq)};
        std::vector<double> t(config.grid + 1), tau(config.grid + 1);
        for (int i = 0; i <= config.grid; ++i) {
            t[i] = static_cast<double>(i) / config.grid;
            tau[i] = config.voltime ? map_time(*config.voltime, config.voltime_t, t[i]) : t[i];
        }
        ConditionalCurve curve;
        switch (config.method) {
            case InterpMethod::Bridge:
                curve.time = tau;
                for (double s : tau) {
                    curve.mean.push_back(bar.c * s);
                    curve.variance.push_back(params.bridge_variance(s));
                }
                break;
            case InterpMethod::CloseHigh: curve = conditional_curve_ch(bar.high_close(), params, tau); break;
            case InterpMethod::CloseHighLow: curve = conditional_curve_chl(bar.stat(), params, tau); break;
        }
        for (std::size_t i = 0; i < tau.size(); ++i) {
            curve.mean[i] = std::clamp(curve.mean[i], bar.l, bar.h);
            curve.variance[i] = std::max(curve.variance[i], 0.0);
            if (!std::isfinite(curve.mean[i]) || !std::isfinite(curve.variance[i]))
                throw NumericError("non-finite curve value");
        }
        out.t = std::move(t);
        out.tau = std::move(tau);
        out.mean = std::move(curve.mean);
        out.variance = std::move(curve.variance);
    } catch (const Error& e) {
        out.error = e.what();
        out.t.clear();
        out.tau.clear();
        out.mean.clear();
        out.variance.clear();
    }
    return out;
}

}  // namespace

InterpolationResult interpolate(const std::vector<OhlcBar>& bars, const InterpolationConfig& config) {
    if (config.grid < 1) throw DomainError("interpolate: grid must be >= 1");
    InterpolationResult res;
    VolEstimate batch_const{0.0, VolMethod::Const, 0};
    try {
        batch_const = sigma_const(bars);
    } catch (const DataError& e) {
        res.warnings.push_back(std::string("constant sigma unavailable: ") + e.what());
    }
    res.bars.resize(bars.size());
    const auto n = static_cast<std::int64_t>(bars.size());
#pragma omp parallel for schedule(dynamic, 4) if (config.parallel)
    for (std::int64_t i = 0; i < n; ++i) res.bars[i] = interpolate_bar(bars[i], config, batch_const);
    for (const BarCurve& b : res.bars) {
        if (!b.sigma_note.empty()) res.warnings.push_back("bar " + b.id + ": " + b.sigma_note);
        if (!b.error.empty()) res.warnings.push_back("bar " + b.id + ": " + b.error);
    }
    return res;
}

std::string emit_curves_csv(const InterpolationResult& result, const InterpolationConfig& config) {
    std::string out = "bar_id,t,tau,mean,variance,sigma_sq,method\n";
    const std::string method = interp_method_name(config.method);
    char buf[160];
    for (const BarCurve& b : result.bars) {
        for (std::size_t i = 0; i < b.t.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%.12g,%.12g,%.12g,", b.t[i], b.tau[i], b.mean[i],
                          b.variance[i], b.sigma.sigma_sq);
            out += b.id;
            out += buf;
            out += method;
            out += '\n';
        }
    }
    return out;
}

std::string emit_curves_json(const InterpolationResult& result, const InterpolationConfig& config) {
    nlohmann::json j;
    j["method"] = interp_method_name(config.method);
    j["sigma_method"] = vol_method_name(config.sigma);
    j["bars"] = nlohmann::json::array();
    for (const BarCurve& b : result.bars) {
        nlohmann::json jb;
        jb["bar_id"] = b.id;
        if (!b.error.empty()) {
            jb["error"] = b.error;
        } else {
            jb["sigma_sq"] = b.sigma.sigma_sq;
            jb["sigma_method"] = vol_method_name(b.sigma.method);
            jb["t"] = b.t;
            jb["tau"] = b.tau;
            jb["mean"] = b.mean;
            jb["variance"] = b.variance;
        }
        if (!b.sigma_note.empty()) jb["note"] = b.sigma_note;
        j["bars"].push_back(std::move(jb));
    }
    j["warnings"] = result.warnings;
    return j.dump(1);
}

}  // namespace condbm
