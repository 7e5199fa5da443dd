#include "catch_amalgamated.hpp"

#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "marketspin/ingestion.hpp"

using mspin::parse_eod_csv;
using mspin::PartitionOptions;
using mspin::partition_windows;
using mspin::WindowScheme;

namespace {

// gzip-compress with zeroed header fields; exercises the magic-byte path.
std::string gzip_bytes(const std::string& text) {
    z_stream strm{};
    REQUIRE(deflateInit2(&strm, Z_BEST_SPEED, Z_DEFLATED, 16 + MAX_WBITS, 8,
                         Z_DEFAULT_STRATEGY) == Z_OK);
    std::string out(deflateBound(&strm, static_cast<uLong>(text.size())) + 32, '\0');
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
    strm.avail_in = static_cast<uInt>(text.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&strm, Z_FINISH) == Z_STREAM_END);
    out.resize(out.size() - strm.avail_out);
    deflateEnd(&strm);
    return out;
}

std::string year_panel_csv(int tickers, bool drop_one_from_q2 = false) {
    // Weekday grid over 2002, constant-ish prices.
    std::string csv = "date,ticker,close\n";
    mspin::Date day{2002, 1, 1};
    while (day.year == 2002) {
        int weekday = static_cast<int>(((day.serial() % 7) + 7) % 7); // 1970-01-01 is a Thursday
        bool weekend = weekday == 2 || weekday == 3;                  // Sat=2, Sun=3
        if (!weekend) {
            for (int i = 0; i < tickers; ++i) {
                if (drop_one_from_q2 && i == 0 && day.month > 3) continue;
                csv += day.str() + ",T" + std::to_string(i) + "," +
                       std::to_string(100 + i + static_cast<int>(day.serial() % 5)) + "\n";
            }
        }
        day = day.plus_days(1);
    }
    return csv;
}

} // namespace

TEST_CASE("csv parsing happy path") {
    auto dataset = parse_eod_csv("date,ticker,close\n2002-01-04,6758,257\n2002-01-07,6758,239\n");
    CHECK(dataset.tickers().size() == 1);
    CHECK(dataset.tickers().front().ticker == "6758");
    CHECK(dataset.all_dates().size() == 2);
    CHECK(dataset.quote_count() == 2);
}

TEST_CASE("csv parsing accepts header-only and CRLF") {
    CHECK(parse_eod_csv("date,ticker,close\n").empty());
    CHECK(parse_eod_csv("date,ticker,close").empty());
    auto dataset = parse_eod_csv("date,ticker,close\r\n2002-01-04,A,10.5\r\n");
    CHECK(dataset.quote_count() == 1);
}

TEST_CASE("csv parse errors carry line numbers") {
    using mspin::ParseError;
    auto line_of = [](auto fn) {
        try {
            fn();
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\n2002-01-04,6758,-5\n"); }) == 2);
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\n2002-01-04,6758,0\n"); }) == 2);
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\nnot-a-date,A,5\n"); }) == 2);
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\n2002-01-04,A,5\n2002-01-05,A\n"); }) == 3);
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\n2002-01-04,,5\n"); }) == 2);
    CHECK(line_of([] { parse_eod_csv("date,ticker,close\n2002-01-04,A,1e3\n"); }) == 2);
    CHECK(line_of([] { parse_eod_csv("wrong,header,here\n"); }) == 1);
    CHECK_THROWS_AS(parse_eod_csv(""), ParseError);
}

TEST_CASE("duplicate (date,ticker) is an error naming both") {
    CHECK_THROWS_WITH(
        parse_eod_csv("date,ticker,close\n2002-01-04,A,5\n2002-01-04,A,6\n"),
        Catch::Matchers::ContainsSubstring("A") &&
            Catch::Matchers::ContainsSubstring("2002-01-04"));
}

TEST_CASE("gzip input is detected and inflated") {
    std::string text = "date,ticker,close\n2002-01-04,6758,257\n2002-01-07,6758,239\n";
    std::string compressed = gzip_bytes(text);
    REQUIRE(static_cast<unsigned char>(compressed[0]) == 0x1f);
    CHECK(mspin::detail::looks_gzip(compressed));
    CHECK(mspin::detail::gunzip(compressed) == text);
    CHECK_THROWS_AS(mspin::detail::gunzip(compressed.substr(0, compressed.size() / 2)),
                    mspin::ParseError);
}

TEST_CASE("quarterly partitioning of a full year") {
    auto dataset = parse_eod_csv(year_panel_csv(5));
    auto result = partition_windows(dataset, PartitionOptions{});
    REQUIRE(result.windows.size() == 4);
    CHECK(result.windows[0].label == "2002-Q1");
    CHECK(result.windows[3].label == "2002-Q4");
    for (const auto& window : result.windows) {
        CHECK(window.companies() == 5);
        window.validate(); // identical grids, base = first close
    }
    // deterministic: same bytes, same windows
    auto again = partition_windows(parse_eod_csv(year_panel_csv(5)), PartitionOptions{});
    for (std::size_t w = 0; w < 4; ++w) {
        CHECK(again.windows[w].label == result.windows[w].label);
        CHECK(again.windows[w].series.size() == result.windows[w].series.size());
        for (std::size_t i = 0; i < result.windows[w].series.size(); ++i)
            CHECK(again.windows[w].series[i].closes == result.windows[w].series[i].closes);
    }
}

TEST_CASE("coverage rule drops a ticker per window") {
    // T0 stops trading after March: present in Q1, dropped from Q2-Q4
    // (zero coverage there means it is simply absent).
    auto dataset = parse_eod_csv(year_panel_csv(4, /*drop_one_from_q2=*/true));
    auto result = partition_windows(dataset, PartitionOptions{});
    REQUIRE(result.windows.size() == 4);
    CHECK(result.windows[0].companies() == 4);
    CHECK(result.windows[1].companies() == 3);
    CHECK(result.windows[2].companies() == 3);
    CHECK(result.windows[3].companies() == 3);
}

TEST_CASE("a ticker below the coverage threshold is dropped and logged") {
    // B has quotes on 2 of 10 days: below the default 95% threshold.
    std::string csv = "date,ticker,close\n";
    for (int d = 0; d < 10; ++d) {
        mspin::Date day = mspin::Date{2002, 1, 7}.plus_days(d);
        csv += day.str() + ",A,100\n";
        if (d < 2) csv += day.str() + ",B,50\n";
    }
    auto result = partition_windows(parse_eod_csv(csv), PartitionOptions{});
    REQUIRE(result.windows.size() == 1);
    CHECK(result.windows[0].companies() == 1);
    CHECK(result.windows[0].series[0].ticker == "A");
    REQUIRE(result.diagnostics.size() == 1);
    CHECK(result.diagnostics[0].dropped_tickers == std::vector<std::string>{"B"});
    CHECK(result.diagnostics[0].quotes_dropped_ticker == 2);
    // conservation: every quote used or attributed
    CHECK(result.diagnostics[0].quotes_used + result.diagnostics[0].quotes_dropped_ticker +
              result.diagnostics[0].quotes_dropped_date ==
          parse_eod_csv(csv).quote_count());
}

TEST_CASE("grid is the intersection of retained tickers' dates") {
    // B misses one mid-window day (above threshold); that date drops from
    // the grid for everyone.
    std::string csv = "date,ticker,close\n";
    for (int d = 0; d < 30; ++d) {
        mspin::Date day = mspin::Date{2002, 1, 7}.plus_days(d);
        csv += day.str() + ",A,100\n";
        if (d != 13) csv += day.str() + ",B,50\n";
    }
    auto result = partition_windows(parse_eod_csv(csv), PartitionOptions{});
    REQUIRE(result.windows.size() == 1);
    const auto& window = result.windows[0];
    CHECK(window.companies() == 2);
    CHECK(window.grid_days() == 29);
    mspin::Date missing = mspin::Date{2002, 1, 7}.plus_days(13);
    for (const auto& date : window.series[0].dates) CHECK(date != missing);
    CHECK(result.diagnostics[0].quotes_dropped_date == 1); // A's quote on the dropped day
}

TEST_CASE("explicit scheme and full-span scheme") {
    auto dataset = parse_eod_csv(year_panel_csv(3));
    PartitionOptions options;
    options.scheme = WindowScheme::parse("full", dataset);
    auto result = partition_windows(dataset, options);
    REQUIRE(result.windows.size() == 1);
    CHECK(result.windows[0].companies() == 3);

    options.scheme = WindowScheme::parse("2002-01-01:2002-06-30,2002-07-01:2002-12-31", dataset);
    auto halves = partition_windows(dataset, options);
    REQUIRE(halves.windows.size() == 2);
    CHECK(halves.windows[0].label == "2002-01-01:2002-06-30");

    CHECK_THROWS_AS(WindowScheme::parse("banana", dataset), mspin::ConfigError);
    CHECK_THROWS_AS(WindowScheme::parse("2002-01-01:2001-01-01", dataset), mspin::ConfigError);
}

TEST_CASE("windows with fewer than 2 grid dates are omitted with a warning") {
    std::string csv = "date,ticker,close\n2002-01-04,A,100\n2002-04-05,A,90\n2002-04-08,A,95\n";
    auto dataset = parse_eod_csv(csv);
    auto result = partition_windows(dataset, PartitionOptions{});
    REQUIRE(result.windows.size() == 1); // only Q2 survives
    CHECK(result.windows[0].label == "2002-Q2");
    CHECK_FALSE(result.warnings.empty());

    // nothing analyzable at all
    std::string lonely = "date,ticker,close\n2002-01-04,A,100\n";
    CHECK_THROWS_AS(partition_windows(parse_eod_csv(lonely), PartitionOptions{}),
                    mspin::NoWindowsError);
}

TEST_CASE("base prices equal day-0 closes in every emitted window") {
    auto dataset = parse_eod_csv(year_panel_csv(6));
    auto result = partition_windows(dataset, PartitionOptions{});
    for (const auto& window : result.windows)
        for (std::size_t i = 0; i < window.series.size(); ++i)
            REQUIRE(window.base_prices[i] == window.series[i].closes.front());
}
