#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "condbm/error.hpp"
#include "condbm/interpolate.hpp"
#include "condbm/ohlc.hpp"

using namespace condbm;
using doctest::Approx;

TEST_CASE("normalization takes logs relative to the open") {
    const IngestResult r =
        ingest_text("date,open,high,low,close\nd1,100,101,99,100.5\n", FormatSpec{}, ValidationMode::Strict);
    REQUIRE(r.bars.size() == 1);
    const OhlcBar& b = r.bars[0];
    CHECK(b.id == "d1");
    CHECK(b.line == 2);
    CHECK(b.h == Approx(std::log(1.01)).epsilon(1e-15));
    CHECK(b.l == Approx(std::log(0.99)).epsilon(1e-15));
    CHECK(b.c == Approx(std::log(1.005)).epsilon(1e-15));
    CHECK(r.warnings.empty());
}

TEST_CASE("ordering violations: strict rejects, lenient widens") {
    const std::string text = "date,open,high,low,close\na,100,101,99,100\nb,100,100.5,99,101\n";
    try {
        ingest_text(text, FormatSpec{}, ValidationMode::Strict);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(e.line() == 3);
    }
    const IngestResult r = ingest_text(text, FormatSpec{}, ValidationMode::Lenient);
    REQUIRE(r.bars.size() == 2);
    CHECK(r.bars[1].high == 101.0);
    CHECK(r.bars[1].h == Approx(r.bars[1].c));
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("log statistics satisfy the bar invariants") {
    for (double o : {99.0, 100.0, 101.0})
        for (double c : {99.5, 100.0, 100.5}) {
            const NormalizeResult n = normalize(OhlcBar{"x", o, 101.0, 99.0, c}, ValidationMode::Strict);
            CHECK(n.bar.h >= std::max(0.0, n.bar.c));
            CHECK(n.bar.l <= std::min(0.0, n.bar.c));
        }
    CHECK_THROWS_AS(normalize(OhlcBar{"x", 100, 101, -1, 100}, ValidationMode::Lenient), DataError);
}

TEST_CASE("empty and malformed input") {
    CHECK_THROWS_AS(ingest_text("", FormatSpec{}, ValidationMode::Strict), DataError);
    CHECK_THROWS_AS(ingest_text("date,open,high,low,close\n# nothing\n", FormatSpec{}, ValidationMode::Strict),
                    DataError);
    CHECK_THROWS_AS(ingest_text("date,open,high,low\n", FormatSpec{}, ValidationMode::Strict), DataError);
    CHECK_THROWS_AS(ingest_text("date,open,high,low,close\na,1,x,1,1\n", FormatSpec{}, ValidationMode::Strict),
                    DataError);
    CHECK_THROWS_AS(ingest("/nonexistent/bars.csv", FormatSpec{}, ValidationMode::Strict), DataError);
}

TEST_CASE("format spec maps columns and delimiters") {
    const FormatSpec f = FormatSpec::parse("delim=;,header=false,id=4,open=0,high=1,low=2,close=3");
    CHECK(f.delimiter == ';');
    CHECK_FALSE(f.header);
    const IngestResult r = ingest_text("10;11;9;10.5;day1\n", f, ValidationMode::Strict);
    REQUIRE(r.bars.size() == 1);
    CHECK(r.bars[0].id == "day1");
    CHECK(r.bars[0].close == 10.5);
    CHECK_THROWS_AS(FormatSpec::parse("colour=red"), DomainError);

    const FormatSpec p = FormatSpec::parse("prior_open=true");
    const IngestResult q =
        ingest_text("date,high,low,close\na,11,9,10\nb,10.5,9.5,10.2\n", p, ValidationMode::Strict);
    REQUIRE(q.bars.size() == 1);
    CHECK(q.bars[0].open == 10.0);
}

TEST_CASE("bars survive a write and read round trip") {
    std::vector<OhlcBar> bars;
    for (int i = 0; i < 5; ++i)
        bars.push_back(normalize(OhlcBar{"d" + std::to_string(i), 100.0 / 3 + i, 40.0 + i / 7.0, 30.0 - i / 11.0,
                                         33.0 + i * 0.1},
                                 ValidationMode::Strict)
                           .bar);
    const auto file = std::filesystem::temp_directory_path() / "condbm_bars_test.csv";
    std::ofstream(file) << emit_bars_csv(bars);
    const IngestResult r = ingest(file.string(), FormatSpec{}, ValidationMode::Strict);
    std::filesystem::remove(file);
    REQUIRE(r.bars.size() == bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        CHECK(r.bars[i].id == bars[i].id);
        CHECK(r.bars[i].open == bars[i].open);
        CHECK(r.bars[i].high == bars[i].high);
        CHECK(r.bars[i].low == bars[i].low);
        CHECK(r.bars[i].close == bars[i].close);
    }
}

TEST_CASE("bridge interpolation is c tau") {
    const std::vector<OhlcBar> bars{OhlcBar::from_log("a", 0.02, -0.01, 0.013), OhlcBar::from_log("b", 0.0, -0.02, -0.02)};
    InterpolationConfig cfg;
    cfg.method = InterpMethod::Bridge;
    cfg.grid = 10;
    const InterpolationResult r = interpolate(bars, cfg);
    REQUIRE(r.bars.size() == 2);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < r.bars[b].t.size(); ++i)
            CHECK(r.bars[b].mean[i] == bars[b].c * r.bars[b].tau[i]);
}

TEST_CASE("symmetric bar has zero midday mean") {
    const std::vector<OhlcBar> bars{OhlcBar::from_log("s", 0.01, -0.01, 0.0)};
    InterpolationConfig cfg;
    cfg.grid = 4;
    const InterpolationResult r = interpolate(bars, cfg);
    REQUIRE(r.failures() == 0);
    CHECK(r.bars[0].t[2] == 0.5);
    CHECK(r.bars[0].mean[2] == Approx(0.0).scale(1e-2).epsilon(1e-10));
}

TEST_CASE("curves stay inside the bar and do not depend on bar order") {
    std::vector<OhlcBar> bars;
    for (int i = 0; i < 12; ++i) {
        const double h = 0.004 + 0.001 * i, l = -0.003 - 0.0007 * i;
        bars.push_back(OhlcBar::from_log(std::to_string(i), h, l, l + (h - l) * ((i * 5) % 11) / 10.0));
    }
    for (InterpMethod m : {InterpMethod::CloseHigh, InterpMethod::CloseHighLow}) {
        InterpolationConfig cfg;
        cfg.method = m;
        cfg.grid = 20;
        const InterpolationResult a = interpolate(bars, cfg);
        std::vector<OhlcBar> rev(bars.rbegin(), bars.rend());
        cfg.parallel = false;
        const InterpolationResult b = interpolate(rev, cfg);
        REQUIRE(a.failures() == 0);
        for (std::size_t k = 0; k < bars.size(); ++k) {
            const BarCurve& x = a.bars[k];
            const BarCurve& y = b.bars[bars.size() - 1 - k];
            CHECK(x.id == y.id);
            CHECK(x.mean == y.mean);
            CHECK(x.variance == y.variance);
            for (std::size_t i = 0; i < x.t.size(); ++i) {
                CHECK(x.mean[i] <= bars[k].h);
                CHECK(x.mean[i] >= bars[k].l);
                CHECK(x.variance[i] >= 0.0);
            }
        }
    }
}

TEST_CASE("volatility time map moves the sample points") {
    const std::vector<OhlcBar> bars{OhlcBar::from_log("a", 0.02, -0.01, 0.013)};
    InterpolationConfig cfg;
    cfg.method = InterpMethod::Bridge;
    cfg.grid = 2;
    const double t[] = {0.0, 0.5, 1.0}, tau[] = {0.0, 0.8, 1.0};
    cfg.voltime = vol_time_from_pairs(t, tau);
    cfg.voltime_t = {0.0, 0.5, 1.0};
    const InterpolationResult r = interpolate(bars, cfg);
    CHECK(r.bars[0].tau[1] == Approx(0.8));
    CHECK(r.bars[0].mean[1] == Approx(0.8 * bars[0].c));
    CHECK(map_time(*cfg.voltime, cfg.voltime_t, 0.25) == Approx(0.4));
}

TEST_CASE("degenerate bar falls back to the batch constant estimate") {
    const std::vector<OhlcBar> bars{OhlcBar::from_log("flat", 0.0, 0.0, 0.0), OhlcBar::from_log("a", 0.02, -0.01, 0.01)};
    InterpolationConfig cfg;
    cfg.sigma = VolMethod::GarmanKlass;
    cfg.grid = 4;
    const InterpolationResult r = interpolate(bars, cfg);
    CHECK(r.bars[0].sigma.method == VolMethod::Const);
    CHECK_FALSE(r.bars[0].sigma_note.empty());
}

TEST_CASE("curve CSV header") {
    const std::vector<OhlcBar> bars{OhlcBar::from_log("a", 0.02, -0.01, 0.013)};
    InterpolationConfig cfg;
    cfg.method = InterpMethod::Bridge;
    cfg.grid = 2;
    const std::string csv = emit_curves_csv(interpolate(bars, cfg), cfg);
    CHECK(csv.rfind("bar_id,t,tau,mean,variance,sigma_sq,method\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(emit_curves_json(interpolate(bars, cfg), cfg).find("\"bar_id\"") != std::string::npos);
}
