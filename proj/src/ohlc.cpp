#include "condbm/ohlc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace condbm {

namespace {

std::string trim(std::string s) {
    auto ws = [](unsigned char ch) { return std::isspace(ch) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::string lower(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        if (ch == delim && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(trim(field));
    return out;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch) != 0; });
}

double parse_number(const std::string& s, std::size_t line, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(line) + ": cannot parse " + what + " '" + s + "'", line);
    return v;
}

bool parse_bool(const std::string& s) {
    const std::string v = lower(s);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw DomainError("format: expected a boolean, got '" + s + "'");
}

}  // namespace

OhlcBar OhlcBar::from_log(std::string id, double h, double l, double c) {
    OhlcBar b;
    b.id = std::move(id);
    b.open = 1.0;
    b.high = std::exp(h);
    b.low = std::exp(l);
    b.close = std::exp(c);
    b.h = h;
    b.l = l;
    b.c = c;
    return b;
}

NormalizeResult normalize(OhlcBar bar, ValidationMode mode) {
    NormalizeResult r;
    const std::string where = bar.line ? "line " + std::to_string(bar.line) + ": " : "bar " + bar.id + ": ";
    for (double p : {bar.open, bar.high, bar.low, bar.close})
        if (!(p > 0.0) || !std::isfinite(p)) throw DataError(where + "prices must be positive", bar.line);
    const double top = std::max(bar.open, bar.close);
    const double bottom = std::min(bar.open, bar.close);
    if (bar.high < top || bar.low > bottom || bar.high < bar.low) {
        if (mode == ValidationMode::Strict) throw DataError(where + "OHLC ordering violated", bar.line);
        if (bar.high < top) {
            r.warnings.push_back(where + "high below open/close, raised");
            bar.high = top;
        }
        if (bar.low > bottom) {
            r.warnings.push_back(where + "low above open/close, lowered");
            bar.low = bottom;
        }
    }
    bar.h = std::log(bar.high / bar.open);
    bar.l = std::log(bar.low / bar.open);
    bar.c = std::log(bar.close / bar.open);
    bar.h = std::max({bar.h, 0.0, bar.c});
    bar.l = std::min({bar.l, 0.0, bar.c});
    r.bar = std::move(bar);
    return r;
}

FormatSpec FormatSpec::parse(const std::string& text) {
    FormatSpec f;
    if (trim(text).empty()) return f;
    for (const std::string& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw DomainError("format: expected key=value, got '" + item + "'");
        const std::string key = lower(trim(item.substr(0, eq)));
        const std::string value = trim(item.substr(eq + 1));
        if (key == "delim") {
            if (value == "tab" || value == "\\t") f.delimiter = '\t';
            else if (value == "semicolon") f.delimiter = ';';
            else if (value.size() == 1) f.delimiter = value[0];
            else throw DomainError("format: bad delimiter '" + value + "'");
        } else if (key == "header") f.header = parse_bool(value);
        else if (key == "id") f.id_column = value;
        else if (key == "open") f.open_column = value;
        else if (key == "high") f.high_column = value;
        else if (key == "low") f.low_column = value;
        else if (key == "close") f.close_column = value;
        else if (key == "prior_open") f.prior_close_as_open = parse_bool(value);
        else throw DomainError("format: unknown key '" + key + "'");
    }
    return f;
}

IngestResult ingest_text(const std::string& text, const FormatSpec& format, ValidationMode mode) {
    IngestResult out;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    bool have_columns = false;
    // id, open, high, low, close; -1 when absent
    int col[5] = {0, 1, 2, 3, 4};
    const std::string* names[5] = {&format.id_column, &format.open_column, &format.high_column, &format.low_column,
                                   &format.close_column};
    auto resolve_indices = [&]() {
        for (int k = 0; k < 5; ++k) {
            if (all_digits(*names[k])) col[k] = std::stoi(*names[k]);
            else if (!format.header) col[k] = k;
        }
        if (format.prior_close_as_open) col[1] = -1;
    };
    if (!format.header) {
        resolve_indices();
        have_columns = true;
    }
    std::optional<double> prev_close;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty() || trim(raw)[0] == '#') continue;
        const std::vector<std::string> fields = split(raw, format.delimiter);
        if (!have_columns) {
            std::vector<std::string> header;
            for (const auto& f : fields) header.push_back(lower(f));
            for (int k = 0; k < 5; ++k) {
                if (k == 1 && format.prior_close_as_open) {
                    col[k] = -1;
                    continue;
                }
                if (all_digits(*names[k])) {
                    col[k] = std::stoi(*names[k]);
                    continue;
                }
                const auto it = std::find(header.begin(), header.end(), lower(*names[k]));
                if (it == header.end()) {
                    if (k == 0) {
                        col[k] = -1;
                        continue;
                    }
                    throw DataError("line " + std::to_string(line_no) + ": missing column '" + *names[k] + "'",
                                    line_no);
                }
                col[k] = static_cast<int>(it - header.begin());
            }
            have_columns = true;
            continue;
        }
        auto field = [&](int k) -> const std::string& {
            if (col[k] < 0 || static_cast<std::size_t>(col[k]) >= fields.size())
                throw DataError("line " + std::to_string(line_no) + ": too few columns", line_no);
            return fields[col[k]];
        };
        OhlcBar bar;
        bar.line = line_no;
        bar.id = col[0] >= 0 ? field(0) : std::to_string(out.bars.size());
        bar.high = parse_number(field(2), line_no, "high");
        bar.low = parse_number(field(3), line_no, "low");
        bar.close = parse_number(field(4), line_no, "close");
        if (format.prior_close_as_open) {
            const bool first = !prev_close;
            const double open = prev_close.value_or(0.0);
            prev_close = bar.close;
            if (first) continue;
            bar.open = open;
        } else {
            bar.open = parse_number(field(1), line_no, "open");
        }
        NormalizeResult n = normalize(std::move(bar), mode);
        for (auto& w : n.warnings) out.warnings.push_back(std::move(w));
        out.bars.push_back(std::move(n.bar));
    }
    if (out.bars.empty()) throw DataError("empty input: no bars");
    return out;
}

IngestResult ingest(const std::string& path, const FormatSpec& format, ValidationMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ingest_text(ss.str(), format, mode);
}

std::string emit_bars_csv(const std::vector<OhlcBar>& bars) {
    std::string out = "date,open,high,low,close\n";
    char buf[128];
    for (const OhlcBar& b : bars) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", b.open, b.high, b.low, b.close);
        out += b.id;
        out += buf;
    }
    return out;
}

}  // namespace condbm
