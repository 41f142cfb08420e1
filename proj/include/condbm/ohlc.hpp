#pragma once

#include <optional>
#include <string>
#include <vector>

#include "condbm/types.hpp"

// OHLC bars: parsing, normalization to log returns from the open, and CSV output.
namespace condbm {

struct OhlcBar {
    std::string id;
    double open = 1.0, high = 1.0, low = 1.0, close = 1.0;  // prices
    // Log statistics relative to the open: h >= max(0, c), l <= min(0, c).
    double h = 0.0, l = 0.0, c = 0.0;
    std::size_t line = 0;  // source line, 0 when not read from a file

    HighLowCloseStat stat() const { return {h, l, c}; }
    HighCloseStat high_close() const { return {h, c}; }
    // Bar whose prices reproduce the given log statistics with open = 1.
    static OhlcBar from_log(std::string id, double h, double l, double c);
};

enum class ValidationMode { Strict, Lenient };

struct NormalizeResult {
    OhlcBar bar;
    std::vector<std::string> warnings;
};

// Checks ordering, computes the log statistics. Strict mode raises DataError
// on an ordering violation; lenient mode widens high/low to cover open and
// close and reports a warning.
NormalizeResult normalize(OhlcBar bar, ValidationMode mode);

// Column mapping for CSV input. Indices are 0-based; when names are given the
// header row is used to resolve them.
struct FormatSpec {
    char delimiter = ',';
    bool header = true;
    std::string id_column = "date";
    std::string open_column = "open";
    std::string high_column = "high";
    std::string low_column = "low";
    std::string close_column = "close";
    // Use the previous bar's close as the open (first bar is dropped).
    bool prior_close_as_open = false;

    // "key=value,..." with keys delim, header, id, open, high, low, close, prior_open.
    static FormatSpec parse(const std::string& text);
};

struct IngestResult {
    std::vector<OhlcBar> bars;
    std::vector<std::string> warnings;
};

IngestResult ingest_text(const std::string& text, const FormatSpec& format, ValidationMode mode);
IngestResult ingest(const std::string& path, const FormatSpec& format, ValidationMode mode);

// Writes bars in the default format at full precision so that ingest()
// recovers them exactly.
std::string emit_bars_csv(const std::vector<OhlcBar>& bars);

}  // namespace condbm
