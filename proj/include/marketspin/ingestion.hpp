#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "marketspin/common.hpp"
#include "marketspin/date.hpp"
#include "marketspin/decimal.hpp"
#include "marketspin/market_model.hpp"

namespace mspin {

struct RawQuote {
    Date date;
    std::string ticker;
    Decimal close;
};

/// All quotes grouped per ticker, with the sorted union of trading dates.
/// Tickers are kept in lexicographic order so every downstream product is
/// deterministic for identical input bytes.
class PanelDataset {
public:
    struct TickerQuotes {
        std::string ticker;
        std::vector<Date> dates; // sorted
        std::unordered_map<std::int64_t, Decimal> close_by_serial;
    };

    static PanelDataset from_quotes(const std::vector<RawQuote>& quotes) {
        PanelDataset dataset;
        std::map<std::string, std::map<Date, Decimal>> grouped;
        for (const auto& quote : quotes) {
            auto [it, inserted] = grouped[quote.ticker].emplace(quote.date, quote.close);
            if (!inserted)
                throw ParseError("duplicate quote for ticker '" + quote.ticker + "' on " +
                                 quote.date.str());
        }
        std::map<Date, bool> union_dates;
        for (auto& [ticker, by_date] : grouped) {
            TickerQuotes tq;
            tq.ticker = ticker;
            for (auto& [date, close] : by_date) {
                tq.dates.push_back(date);
                tq.close_by_serial.emplace(date.serial(), close);
                union_dates[date] = true;
            }
            dataset.tickers_.push_back(std::move(tq));
        }
        for (auto& [date, unused] : union_dates) dataset.all_dates_.push_back(date);
        return dataset;
    }

    const std::vector<TickerQuotes>& tickers() const { return tickers_; }
    const std::vector<Date>& all_dates() const { return all_dates_; }
    bool empty() const { return tickers_.empty(); }
    std::size_t quote_count() const {
        std::size_t n = 0;
        for (const auto& tq : tickers_) n += tq.dates.size();
        return n;
    }

private:
    std::vector<TickerQuotes> tickers_;
    std::vector<Date> all_dates_;
};

namespace detail {

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

} // namespace detail

/// Strict CSV reader for the `date,ticker,close` schema. Any malformed
/// line, non-positive close or duplicate (date, ticker) pair is an error
/// with its 1-based line number.
inline PanelDataset parse_eod_csv(std::string_view text) {
    std::vector<RawQuote> quotes;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        line = detail::strip_cr(line);
        if (line_no == 1) {
            if (line != "date,ticker,close")
                throw ParseError("expected header 'date,ticker,close'", 1);
            saw_header = true;
            continue;
        }
        if (line.empty() && pos >= text.size()) break; // trailing newline
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string_view::npos ? std::string_view::npos : line.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
            line.find(',', c2 + 1) != std::string_view::npos)
            throw ParseError("expected 3 comma-separated fields", line_no);
        std::string_view date_field = line.substr(0, c1);
        std::string_view ticker_field = line.substr(c1 + 1, c2 - c1 - 1);
        std::string_view close_field = line.substr(c2 + 1);

        auto date = Date::try_parse(date_field);
        if (!date) throw ParseError("malformed date '" + std::string(date_field) + "'", line_no);
        if (ticker_field.empty()) throw ParseError("empty ticker", line_no);
        auto close = Decimal::try_parse(close_field);
        if (!close) throw ParseError("malformed close '" + std::string(close_field) + "'", line_no);
        if (!close->positive())
            throw ParseError("close must be positive, got '" + std::string(close_field) + "'", line_no);
        quotes.push_back(RawQuote{*date, std::string(ticker_field), *close});
    }
    if (!saw_header) throw ParseError("missing header 'date,ticker,close'", 1);
    return PanelDataset::from_quotes(quotes);
}

inline PanelDataset parse_eod_csv(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_eod_csv(std::string_view(buffer.str()));
}

namespace detail {

inline bool looks_gzip(std::string_view bytes) {
    return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
           static_cast<unsigned char>(bytes[1]) == 0x8b;
}

inline std::string gunzip(std::string_view bytes) {
    z_stream strm{};
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK) throw Error("zlib init failed");
    std::string out;
    std::vector<unsigned char> chunk(1 << 16);
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
    strm.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    do {
        strm.next_out = chunk.data();
        strm.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw ParseError("corrupt gzip stream");
        }
        out.append(reinterpret_cast<char*>(chunk.data()), chunk.size() - strm.avail_out);
    } while (rc != Z_STREAM_END && (strm.avail_in > 0 || strm.avail_out == 0));
    inflateEnd(&strm);
    if (rc != Z_STREAM_END) throw ParseError("truncated gzip stream");
    return out;
}

} // namespace detail

/// Reads a panel file; gzip input is detected by magic bytes and inflated.
inline PanelDataset read_panel_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open input file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string bytes = buffer.str();
    if (detail::looks_gzip(bytes)) return parse_eod_csv(std::string_view(detail::gunzip(bytes)));
    return parse_eod_csv(std::string_view(bytes));
}

/// Window scheme: calendar quarters, or explicit inclusive date ranges.
struct WindowScheme {
    struct Range {
        Date lo, hi;
        std::string label() const { return lo.str() + ":" + hi.str(); }
    };

    bool quarterly = true;
    std::vector<Range> ranges; // used when !quarterly

    static WindowScheme calendar_quarters() { return WindowScheme{}; }

    static WindowScheme explicit_ranges(std::vector<Range> ranges) {
        WindowScheme scheme;
        scheme.quarterly = false;
        scheme.ranges = std::move(ranges);
        if (scheme.ranges.empty()) throw ConfigError("explicit scheme needs at least one range");
        for (const auto& range : scheme.ranges)
            if (range.hi < range.lo)
                throw ConfigError("bad range " + range.label() + " (end before start)");
        return scheme;
    }

    /// "quarterly", "full", or comma-separated "YYYY-MM-DD:YYYY-MM-DD" ranges.
    /// "full" resolves to one window spanning the whole dataset.
    static WindowScheme parse(std::string_view text, const PanelDataset& dataset) {
        if (text == "quarterly") return calendar_quarters();
        if (text == "full") {
            if (dataset.all_dates().empty()) throw NoWindowsError();
            return explicit_ranges({Range{dataset.all_dates().front(), dataset.all_dates().back()}});
        }
        std::vector<Range> ranges;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t comma = text.find(',', pos);
            std::string_view item = text.substr(pos, comma == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : comma - pos);
            if (item.size() != 21 || item[10] != ':')
                throw ConfigError("bad scheme '" + std::string(text) +
                                  "' (expected quarterly, full, or YYYY-MM-DD:YYYY-MM-DD[,...])");
            ranges.push_back(Range{Date::parse(item.substr(0, 10)), Date::parse(item.substr(11))});
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return explicit_ranges(std::move(ranges));
    }
};

struct PartitionOptions {
    WindowScheme scheme = WindowScheme::calendar_quarters();
    double min_coverage = 0.95; // quote fraction a ticker needs inside a window
};

struct WindowDiagnostics {
    std::string label;
    std::size_t candidate_dates = 0;       // union of quote dates in range
    std::size_t grid_dates = 0;            // intersection grid actually used
    std::size_t companies = 0;             // tickers retained in the window
    std::vector<std::string> dropped_tickers; // below coverage threshold
    std::size_t quotes_used = 0;
    std::size_t quotes_dropped_ticker = 0; // on dropped tickers
    std::size_t quotes_dropped_date = 0;   // retained ticker, date off the grid
    bool omitted = false;
    std::string omitted_reason;
};

struct PartitionResult {
    std::vector<SampleWindow> windows;
    std::vector<WindowDiagnostics> diagnostics; // one per attempted window
    std::vector<std::string> warnings;
};

/// Cuts the dataset into sample windows. The trading grid of a window is
/// the intersection of quote dates over retained tickers; tickers quoted on
/// less than `min_coverage` of the window's candidate dates are dropped
/// (per window), and windows with fewer than 2 grid dates are omitted with
/// a warning. Every input quote is either used or accounted for in the
/// window diagnostics.
inline PartitionResult partition_windows(const PanelDataset& dataset, const PartitionOptions& options) {
    if (dataset.empty()) throw NoWindowsError();

    std::vector<std::pair<std::string, WindowScheme::Range>> ranges;
    if (options.scheme.quarterly) {
        Date first = dataset.all_dates().front();
        Date last = dataset.all_dates().back();
        int year = first.year, quarter = first.quarter();
        while (true) {
            auto [lo, hi] = quarter_range(year, quarter);
            if (last < lo) break;
            ranges.emplace_back(std::to_string(year) + "-Q" + std::to_string(quarter),
                                WindowScheme::Range{lo, hi});
            if (++quarter == 5) {
                quarter = 1;
                ++year;
            }
        }
    } else {
        for (const auto& range : options.scheme.ranges) ranges.emplace_back(range.label(), range);
    }

    PartitionResult result;
    for (const auto& [label, range] : ranges) {
        WindowDiagnostics diag;
        diag.label = label;

        // Candidate dates: union of quote dates inside the range.
        std::vector<Date> candidates;
        for (const auto& date : dataset.all_dates())
            if (!(date < range.lo) && !(range.hi < date)) candidates.push_back(date);
        diag.candidate_dates = candidates.size();
        if (candidates.size() < 2) {
            diag.omitted = true;
            diag.omitted_reason = "fewer than 2 trading dates in range";
            for (const auto& tq : dataset.tickers())
                diag.quotes_dropped_date += static_cast<std::size_t>(
                    std::count_if(tq.dates.begin(), tq.dates.end(), [&](const Date& d) {
                        return !(d < range.lo) && !(range.hi < d);
                    }));
            if (diag.candidate_dates > 0)
                result.warnings.push_back("window " + label + " omitted: " + diag.omitted_reason);
            result.diagnostics.push_back(std::move(diag));
            continue;
        }

        // Coverage filter per ticker, then grid = intersection over retained.
        std::vector<const PanelDataset::TickerQuotes*> retained;
        for (const auto& tq : dataset.tickers()) {
            std::size_t have = 0;
            for (const auto& date : candidates)
                if (tq.close_by_serial.count(date.serial())) ++have;
            double coverage = static_cast<double>(have) / static_cast<double>(candidates.size());
            if (have > 0 && coverage + 1e-12 >= options.min_coverage) {
                retained.push_back(&tq);
            } else {
                if (have > 0) diag.dropped_tickers.push_back(tq.ticker);
                diag.quotes_dropped_ticker += have;
            }
        }
        if (retained.empty()) {
            diag.omitted = true;
            diag.omitted_reason = "no ticker met the coverage threshold";
            result.warnings.push_back("window " + label + " omitted: " + diag.omitted_reason);
            result.diagnostics.push_back(std::move(diag));
            continue;
        }

        std::vector<Date> grid;
        for (const auto& date : candidates) {
            bool everyone = true;
            for (const auto* tq : retained)
                if (!tq->close_by_serial.count(date.serial())) {
                    everyone = false;
                    break;
                }
            if (everyone) grid.push_back(date);
        }
        if (grid.size() < 2) {
            diag.omitted = true;
            diag.omitted_reason = "fewer than 2 common trading dates after alignment";
            for (const auto* tq : retained)
                diag.quotes_dropped_date += static_cast<std::size_t>(
                    std::count_if(tq->dates.begin(), tq->dates.end(), [&](const Date& d) {
                        return !(d < range.lo) && !(range.hi < d);
                    }));
            result.warnings.push_back("window " + label + " omitted: " + diag.omitted_reason);
            result.diagnostics.push_back(std::move(diag));
            continue;
        }
        diag.grid_dates = grid.size();
        diag.companies = retained.size();

        SampleWindow window;
        window.label = label;
        for (const auto* tq : retained) {
            PriceSeries series;
            series.ticker = tq->ticker;
            series.dates = grid;
            series.closes.reserve(grid.size());
            for (const auto& date : grid) series.closes.push_back(tq->close_by_serial.at(date.serial()));
            window.base_prices.push_back(series.closes.front());
            window.series.push_back(std::move(series));

            std::size_t in_range = 0;
            for (const auto& date : tq->dates)
                if (!(date < range.lo) && !(range.hi < date)) ++in_range;
            diag.quotes_used += grid.size();
            diag.quotes_dropped_date += in_range - grid.size();
        }
        window.validate();
        result.windows.push_back(std::move(window));
        result.diagnostics.push_back(std::move(diag));
    }

    if (result.windows.empty()) throw NoWindowsError();
    return result;
}

} // namespace mspin
