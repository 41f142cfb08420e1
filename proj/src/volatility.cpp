#include "condbm/volatility.hpp"

#include <cmath>
#include <limits>

#include "condbm/extrema.hpp"

namespace condbm {

std::string vol_method_name(VolMethod m) {
    switch (m) {
        case VolMethod::Const: return "const";
        case VolMethod::GarmanKlass: return "gk";
        case VolMethod::MaxLikelihood: return "ml";
    }
    return "";
}

VolMethod parse_vol_method(const std::string& name) {
    if (name == "const") return VolMethod::Const;
    if (name == "gk") return VolMethod::GarmanKlass;
    if (name == "ml") return VolMethod::MaxLikelihood;
    throw DomainError("unknown sigma method: " + name);
}

VolEstimate sigma_const(std::span<const OhlcBar> bars) {
    if (bars.empty()) throw DataError("sigma_const: no bars");
    double s = 0.0;
    for (const OhlcBar& b : bars) s += b.c * b.c;
    VolEstimate e;
    e.sigma_sq = s / static_cast<double>(bars.size());
    e.method = VolMethod::Const;
    if (!(e.sigma_sq > 0.0)) throw DataError("sigma_const: all closes are zero");
    return e;
}

VolEstimate sigma_garman_klass(const HighLowCloseStat& st, const GarmanKlassConstants& k) {
    const double h = st.high, l = st.low, c = st.close;
    const double v = k.k1 * (h - l) * (h - l) - k.k2 * (c * (h + l) - 2.0 * h * l) - k.k3 * c * c;
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("sigma_garman_klass: degenerate bar");
    return {v, VolMethod::GarmanKlass, 0};
}

namespace {

double loglik(const HighLowCloseStat& st, double log_var) {
    try {
        const double v = log_density_hlc(st, ModelParams{std::exp(0.5 * log_var)});
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const Error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

VolEstimate sigma_max_likelihood(const HighLowCloseStat& st, std::optional<Bracket> bracket, double rel_tolerance) {
    st.validate();
    if (!bracket) {
        double scale;
        try {
            scale = sigma_garman_klass(st).sigma_sq;
        } catch (const DataError&) {
            scale = 0.5 * st.range() * st.range();
        }
        bracket = Bracket{0.01 * scale, 100.0 * scale};
    }
    if (!(bracket->lo > 0.0 && bracket->hi > bracket->lo)) throw DomainError("sigma_max_likelihood: invalid bracket");

    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    const double lo0 = std::log(bracket->lo), hi0 = std::log(bracket->hi);
    double a = lo0, b = hi0;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = loglik(st, x1), f2 = loglik(st, x2);
    int it = 0;
    while (b - a > rel_tolerance) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = loglik(st, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = loglik(st, x2);
        }
        ++it;
    }
    const double x = f1 >= f2 ? x1 : x2;
    const double fx = std::max(f1, f2);
    const double edge = 1e-6 * (hi0 - lo0);
    if (!std::isfinite(fx) || x - lo0 < edge || hi0 - x < edge) {
        throw BracketError("sigma_max_likelihood: no interior maximum in bracket", loglik(st, lo0),
                           loglik(st, hi0));
    }
    return {std::exp(x), VolMethod::MaxLikelihood, it};
}

VolTimeMap estimate_vol_time(const std::vector<std::vector<double>>& days, int lag) {
    if (days.empty()) throw DataError("estimate_vol_time: no days");
    const std::size_t slots = days.front().size();
    if (slots < 2) throw DataError("estimate_vol_time: need at least two time slots");
    if (lag < 1 || static_cast<std::size_t>(lag) >= slots) throw DomainError("estimate_vol_time: lag out of range");
    for (std::size_t d = 0; d < days.size(); ++d) {
        if (days[d].size() != slots) throw DataError("estimate_vol_time: day " + std::to_string(d) + " has a gap", d + 1);
        for (double x : days[d])
            if (!std::isfinite(x)) throw DataError("estimate_vol_time: missing value in day " + std::to_string(d), d + 1);
    }
    const std::size_t n = slots - 1;
    const auto L = static_cast<std::size_t>(lag);
    VolTimeMap m;
    m.sigma_sq.assign(slots, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        // Increment over lag slots ending at i, shifted right near the open;
        // divided by the span so every slot is a per-slot rate.
        const std::size_t start = i >= L ? i - L : 0;
        const std::size_t end = i >= L ? i : std::min(L, n);
        double s = 0.0;
        for (const auto& day : days) {
            const double dx = day[end] - day[start];
            s += dx * dx;
        }
        m.sigma_sq[i] = s / static_cast<double>(days.size()) / static_cast<double>(end - start);
        m.total += m.sigma_sq[i];
    }
    if (!(m.total > 0.0)) throw DataError("estimate_vol_time: zero total variance");
    m.tau.assign(slots, 0.0);
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        acc += m.sigma_sq[i];
        m.tau[i] = acc / m.total;
    }
    m.tau[n] = 1.0;
    return m;
}

VolTimeMap vol_time_from_pairs(std::span<const double> t, std::span<const double> tau) {
    if (t.size() != tau.size() || t.size() < 2) throw DataError("vol time map: need matching t and tau columns");
    VolTimeMap m;
    m.tau.assign(tau.begin(), tau.end());
    m.sigma_sq.assign(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) throw DataError("vol time map: t must be increasing", i + 1);
        if (!(tau[i] >= tau[i - 1])) throw DataError("vol time map: tau must be nondecreasing", i + 1);
        m.sigma_sq[i] = tau[i] - tau[i - 1];
    }
    if (tau.front() < 0.0 || std::abs(tau.back() - 1.0) > 1e-12) throw DataError("vol time map: tau must run from >= 0 to 1");
    m.tau.back() = 1.0;
    m.total = 1.0 - tau.front();
    return m;
}

void ScoreAccumulator::add_day(std::span<const double> x, std::span<const double> est, std::span<const double> w) {
    if (x.size() != est.size() || x.size() != w.size()) throw DomainError("score: series are not aligned");
    double err = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - est[i];
        err += w[i] * d * d;
        energy += w[i] * x[i] * x[i];
    }
    if (!(energy > 0.0)) throw NumericError("score: zero signal energy on a day, relative score undefined");
    err_ += err;
    energy_ += energy;
    rel_sum_ += err / energy;
    terms_ += x.size();
    ++days_;
}

Scores ScoreAccumulator::result() const {
    if (days_ == 0 || !(energy_ > 0.0)) throw NumericError("score: no data");
    return {err_ / static_cast<double>(terms_), err_ / energy_, rel_sum_ / static_cast<double>(days_)};
}

Scores score(std::span<const double> x, std::span<const double> estimate, std::span<const double> weight) {
    ScoreAccumulator acc;
    acc.add_day(x, estimate, weight);
    return acc.result();
}

}  // namespace condbm
