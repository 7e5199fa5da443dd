#pragma once

#include <chrono>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "marketspin/common.hpp"
#include "marketspin/fitting.hpp"
#include "marketspin/ingestion.hpp"
#include "marketspin/market_model.hpp"
#include "marketspin/rng.hpp"
#include "marketspin/synthetic.hpp"

namespace mspin {

namespace detail {

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(length * 2, '0');
    for (unsigned i = 0; i < length; ++i) {
        out[2 * i] = kHex[digest[i] >> 4];
        out[2 * i + 1] = kHex[digest[i] & 0xf];
    }
    return out;
}

/// Shortest round-trip decimal form, identical on every run.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string utc_timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

struct AnalyzeOptions {
    std::string input_path;
    std::string scheme = "quarterly"; // quarterly | full | explicit ranges
    double coverage = 0.95;
    std::int64_t fit_t_min = 1;
    std::optional<std::int64_t> fit_t_max; // absent: last strictly positive R
    std::size_t resamples = 200;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output_dir = ".";
    std::string timestamp; // empty: stamped at run time; fixed in tests
};

/// Everything computable before any fitting: parsed input, windows, curves
/// and the resolved fit range. curve.csv and plot.dat derive from this
/// stage alone, so they exist even when the fit itself degenerates.
struct CurveStage {
    std::string input_bytes;
    PartitionResult partition;
    std::vector<PersistenceCurve> window_curves;
    PersistenceCurve averaged;
    std::int64_t fit_t_min = 1;
    std::int64_t fit_t_max = 0;
    bool fit_range_truncated = false;
};

struct AnalysisReport {
    PartitionResult partition;
    std::vector<PersistenceCurve> window_curves;
    PersistenceCurve averaged;
    SegmentFit single_fit;
    DoublePowerLawFit double_fit;
    BootstrapSummary bootstrap;
    std::int64_t fit_t_min = 1;
    std::int64_t fit_t_max = 0;
    bool fit_range_truncated = false;
    nlohmann::ordered_json json;
};

namespace detail {

inline nlohmann::ordered_json segment_json(const SegmentFit& fit) {
    return {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"t_lo", fit.t_lo},
            {"t_hi", fit.t_hi},
            {"slope_stderr", fit.slope_stderr},
            {"sse", fit.sse},
            {"n_points", fit.n_points}};
}

inline nlohmann::ordered_json distribution_json(const DistributionSummary& s) {
    return {{"mean", s.mean}, {"std_error", s.std_error}, {"ci95", {s.ci_low, s.ci_high}}};
}

inline nlohmann::ordered_json curve_json(const PersistenceCurve& curve) {
    nlohmann::ordered_json j;
    j["sample_count"] = curve.sample_count;
    j["total_spins"] = curve.total;
    j["n"] = curve.counts;
    j["R"] = curve.density;
    return j;
}

} // namespace detail

/// Parse, partition, map to spins and measure; resolves the fit range but
/// fits nothing yet.
inline CurveStage run_curve_stage(const AnalyzeOptions& options) {
    std::ifstream in(options.input_path, std::ios::binary);
    if (!in) throw ParseError("cannot open input file '" + options.input_path + "'");
    CurveStage stage;
    stage.input_bytes.assign((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    std::string text = detail::looks_gzip(stage.input_bytes) ? detail::gunzip(stage.input_bytes)
                                                             : stage.input_bytes;

    PanelDataset dataset = parse_eod_csv(std::string_view(text));

    PartitionOptions popt;
    popt.scheme = WindowScheme::parse(options.scheme, dataset);
    popt.min_coverage = options.coverage;
    stage.partition = partition_windows(dataset, popt);

    stage.window_curves.reserve(stage.partition.windows.size());
    for (const auto& window : stage.partition.windows)
        stage.window_curves.push_back(window_persistence_curve(window, options.threads));
    stage.averaged = stage.window_curves.size() == 1 ? stage.window_curves.front()
                                                     : average_curves(stage.window_curves);

    // Fit domain: t >= 1 (the t=0 anchor is definitional), truncated to the
    // last strictly positive density. Monotonicity makes that a prefix.
    std::int64_t last_positive = -1;
    for (std::size_t t = 0; t < stage.averaged.size(); ++t)
        if (stage.averaged.density[t] > 0.0) last_positive = static_cast<std::int64_t>(t);
    stage.fit_t_min = options.fit_t_min;
    std::int64_t support_max = static_cast<std::int64_t>(stage.averaged.size()) - 1;
    stage.fit_t_max = options.fit_t_max.value_or(last_positive < 0 ? support_max : last_positive);
    if (!options.fit_t_max && stage.fit_t_max < support_max) stage.fit_range_truncated = true;
    return stage;
}

/// Fits, bootstraps and assembles the machine-readable report document on
/// top of a measured curve stage.
inline AnalysisReport complete_analysis(CurveStage stage, const AnalyzeOptions& options) {
    AnalysisReport report;
    report.partition = std::move(stage.partition);
    report.window_curves = std::move(stage.window_curves);
    report.averaged = std::move(stage.averaged);
    report.fit_t_min = stage.fit_t_min;
    report.fit_t_max = stage.fit_t_max;
    report.fit_range_truncated = stage.fit_range_truncated;
    const std::string& bytes = stage.input_bytes;

    report.double_fit = fit_double_power_law(report.averaged, report.fit_t_min, report.fit_t_max);
    report.single_fit = fit_power_law(report.averaged, report.fit_t_min, report.fit_t_max);

    BootstrapOptions bopt;
    bopt.t_min = report.fit_t_min;
    bopt.t_max = report.fit_t_max;
    bopt.n_resamples = options.resamples;
    bopt.seed = options.seed;
    bopt.threads = options.threads;
    report.bootstrap = bootstrap_slopes(report.partition.windows, bopt);

    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["tool"] = {{"name", std::string(kToolName)}, {"version", std::string(kToolVersion)}};
    j["generated_at"] = options.timestamp.empty() ? detail::utc_timestamp_now() : options.timestamp;
    j["input"] = {{"path", options.input_path},
                  {"sha256", detail::sha256_hex(bytes)},
                  {"size_bytes", bytes.size()}};
    j["config"] = {{"scheme", options.scheme},
                   {"coverage_threshold", options.coverage},
                   {"fit", {{"t_min", report.fit_t_min},
                            {"t_max", report.fit_t_max},
                            {"t_max_requested",
                             options.fit_t_max ? nlohmann::ordered_json(*options.fit_t_max)
                                               : nlohmann::ordered_json("auto")},
                            {"truncated_to_positive_support", report.fit_range_truncated}}},
                   {"resamples", options.resamples},
                   {"seed", options.seed},
                   // thread count never changes any number and is left out,
                   // so reports are byte-comparable across machines
                   {"rng", std::string(rng::kAlgorithm)}};
    j["windows"] = nlohmann::ordered_json::array();
    for (const auto& diag : report.partition.diagnostics) {
        nlohmann::ordered_json w;
        w["label"] = diag.label;
        w["omitted"] = diag.omitted;
        if (diag.omitted) {
            w["reason"] = diag.omitted_reason;
        } else {
            w["companies"] = diag.companies;
            w["grid_dates"] = diag.grid_dates;
        }
        w["dropped_tickers"] = diag.dropped_tickers;
        w["quotes_used"] = diag.quotes_used;
        w["quotes_dropped_ticker"] = diag.quotes_dropped_ticker;
        w["quotes_dropped_date"] = diag.quotes_dropped_date;
        j["windows"].push_back(std::move(w));
    }
    j["warnings"] = report.partition.warnings;
    j["curve"] = detail::curve_json(report.averaged);
    j["curve"]["per_window"] = nlohmann::ordered_json::array();
    for (std::size_t w = 0; w < report.window_curves.size(); ++w) {
        auto cw = detail::curve_json(report.window_curves[w]);
        cw["label"] = report.partition.windows[w].label;
        j["curve"]["per_window"].push_back(std::move(cw));
    }
    j["fit"] = {{"single", detail::segment_json(report.single_fit)},
                {"double", {{"short", detail::segment_json(report.double_fit.short_segment)},
                            {"long", detail::segment_json(report.double_fit.long_segment)},
                            {"breakpoint", report.double_fit.breakpoint},
                            {"total_sse", report.double_fit.total_sse},
                            {"single_fit_sse", report.double_fit.single_fit_sse}}}};
    j["bootstrap"] = {{"resamples_requested", options.resamples},
                      {"resamples_kept", report.bootstrap.n_resamples},
                      {"degenerate_excluded", report.bootstrap.n_degenerate},
                      {"short_slope", detail::distribution_json(report.bootstrap.short_slope)},
                      {"long_slope", detail::distribution_json(report.bootstrap.long_slope)},
                      {"breakpoint", detail::distribution_json(report.bootstrap.breakpoint)}};
    report.json = std::move(j);
    return report;
}

/// The full pipeline in one call (tests and library users); the CLI runs
/// the stages separately so data files survive a degenerate fit.
inline AnalysisReport run_analysis(const AnalyzeOptions& options) {
    return complete_analysis(run_curve_stage(options), options);
}

/// curve.csv and plot.dat need only the measured curves.
inline void write_curve_files(const PartitionResult& partition,
                              const std::vector<PersistenceCurve>& window_curves,
                              const PersistenceCurve& averaged, std::int64_t fit_t_min,
                              const AnalyzeOptions& options) {
    namespace fs = std::filesystem;
    fs::create_directories(options.output_dir);

    {
        std::ofstream out(fs::path(options.output_dir) / "curve.csv", std::ios::binary);
        if (!out) throw Error("cannot write curve.csv in '" + options.output_dir + "'");
        out << "t,n,R";
        for (const auto& window : partition.windows) out << ",R_" << window.label;
        out << '\n';
        for (std::size_t t = 0; t < averaged.size(); ++t) {
            out << t << ',' << averaged.counts[t] << ','
                << detail::format_double(averaged.density[t]);
            for (const auto& curve : window_curves)
                out << ',' << detail::format_double(curve.density[t]);
            out << '\n';
        }
    }

    {
        std::ofstream out(fs::path(options.output_dir) / "plot.dat", std::ios::binary);
        if (!out) throw Error("cannot write plot.dat in '" + options.output_dir + "'");
        // Reference line: the d = 1 branch (slope -3/2), scaled through the
        // first fitted point.
        double t0 = static_cast<double>(fit_t_min);
        double scale = averaged.density[static_cast<std::size_t>(fit_t_min)] /
                       reference_value(1.0, t0);
        out << "# ln(t)  ln(R)  ln(reference d=1, slope -3/2, scaled at t=" << fit_t_min << ")\n";
        for (std::size_t t = 1; t < averaged.size(); ++t) {
            double density = averaged.density[t];
            if (!(density > 0.0)) break; // monotone: zeros form the tail
            double lt = std::log(static_cast<double>(t));
            out << detail::format_double(lt) << ' '
                << detail::format_double(std::log(density)) << ' '
                << detail::format_double(std::log(scale * reference_value(1.0, static_cast<double>(t))))
                << '\n';
        }
    }
}

inline void write_curve_files(const CurveStage& stage, const AnalyzeOptions& options) {
    write_curve_files(stage.partition, stage.window_curves, stage.averaged, stage.fit_t_min,
                      options);
}

/// Writes report.json, curve.csv and plot.dat into options.output_dir.
inline void write_report_files(const AnalysisReport& report, const AnalyzeOptions& options) {
    namespace fs = std::filesystem;
    write_curve_files(report.partition, report.window_curves, report.averaged, report.fit_t_min,
                      options);
    std::ofstream out(fs::path(options.output_dir) / "report.json", std::ios::binary);
    if (!out) throw Error("cannot write report.json in '" + options.output_dir + "'");
    out << report.json.dump(2) << '\n';
}

/// Panel writer in the exact schema parse_eod_csv reads; simulate output
/// round-trips losslessly.
inline void write_panel_csv(const SampleWindow& window, std::ostream& out) {
    out << "date,ticker,close\n";
    for (std::size_t i = 0; i < window.series.size(); ++i) {
        const auto& series = window.series[i];
        for (std::size_t k = 0; k < series.dates.size(); ++k)
            out << series.dates[k].str() << ',' << series.ticker << ',' << series.closes[k].str()
                << '\n';
    }
}

} // namespace mspin
