// marketspin CLI: analyze EOD price panels, simulate null-model panels,
// and print the exact +-1-walk survival oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "marketspin/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;   // bad flags or unreadable/malformed input
constexpr int kExitNoData = 3;  // nothing analyzable after partitioning
constexpr int kExitFit = 4;     // degenerate fit

int run_analyze(const mspin::AnalyzeOptions& options) {
    mspin::AnalysisReport report = mspin::run_analysis(options);
    mspin::write_report_files(report, options);

    for (const auto& warning : report.partition.warnings)
        std::cerr << "warning: " << warning << '\n';
    std::cout << "windows analyzed: " << report.partition.windows.size() << '\n';
    for (std::size_t w = 0; w < report.partition.windows.size(); ++w) {
        const auto& window = report.partition.windows[w];
        std::cout << "  " << window.label << ": N=" << window.companies()
                  << ", grid=" << window.grid_days() << " dates\n";
    }
    const auto& fit = report.double_fit;
    std::cout << "fit range: t in [" << report.fit_t_min << ", " << report.fit_t_max << "]"
              << (report.fit_range_truncated ? " (truncated to positive support)" : "") << '\n';
    std::printf("single slope: %.4f +- %.4f (sse %.6g)\n", report.single_fit.slope,
                report.single_fit.slope_stderr, report.single_fit.sse);
    std::printf("double fit: short %.4f +- %.4f on [%lld, %lld], long %.4f +- %.4f on [%lld, %lld]\n",
                fit.short_segment.slope, fit.short_segment.slope_stderr,
                static_cast<long long>(fit.short_segment.t_lo),
                static_cast<long long>(fit.short_segment.t_hi), fit.long_segment.slope,
                fit.long_segment.slope_stderr, static_cast<long long>(fit.long_segment.t_lo),
                static_cast<long long>(fit.long_segment.t_hi));
    std::printf("breakpoint t* = %lld; total sse %.6g vs single %.6g\n",
                static_cast<long long>(fit.breakpoint), fit.total_sse, fit.single_fit_sse);
    const auto& bs = report.bootstrap;
    std::printf("bootstrap (%zu kept, %zu degenerate): short %.4f [%.4f, %.4f], long %.4f [%.4f, %.4f]\n",
                bs.n_resamples, bs.n_degenerate, bs.short_slope.mean, bs.short_slope.ci_low,
                bs.short_slope.ci_high, bs.long_slope.mean, bs.long_slope.ci_low,
                bs.long_slope.ci_high);
    std::cout << "outputs: " << options.output_dir << "/report.json, curve.csv, plot.dat\n";
    return kExitOk;
}

int run_simulate(const mspin::WalkConfig& config, const std::string& output_path) {
    config.validate();
    mspin::SampleWindow panel = mspin::simulate_walk_panel(config);
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw mspin::ConfigError("cannot write output file '" + output_path + "'");
    mspin::write_panel_csv(panel, out);
    std::cout << "wrote " << panel.companies() << " walkers x " << panel.grid_days()
              << " dates to " << output_path << '\n';
    return kExitOk;
}

int run_oracle(int t_max, int cap) {
    mspin::SurvivalTable table(cap);
    if (t_max > table.cap())
        throw mspin::ConfigError("t_max " + std::to_string(t_max) + " above table cap " +
                                 std::to_string(table.cap()));
    std::cout << "t,exact,decimal\n";
    for (int t = 0; t <= t_max; ++t) {
        auto p = table.survival(t);
        std::cout << t << ',' << p.str() << ',' << mspin::detail::format_double(p.value()) << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Persistence analysis of EOD share-price panels via an Ising-spin mapping"};
    app.require_subcommand(1);

    mspin::AnalyzeOptions aopt;
    auto* analyze = app.add_subcommand("analyze", "Map a price panel onto spins, measure R(t), fit power laws");
    analyze->add_option("--input", aopt.input_path, "CSV input (date,ticker,close); gzip detected by magic bytes")
        ->required();
    analyze->add_option("--scheme", aopt.scheme,
                        "quarterly | full | YYYY-MM-DD:YYYY-MM-DD[,...]")
        ->capture_default_str();
    analyze->add_option("--coverage", aopt.coverage, "min quote fraction to keep a ticker in a window")
        ->capture_default_str();
    analyze->add_option("--fit-min", aopt.fit_t_min, "first spin time entering the fits")
        ->capture_default_str();
    std::int64_t fit_max = -1;
    analyze->add_option("--fit-max", fit_max, "last spin time entering the fits (default: last positive R)");
    analyze->add_option("--resamples", aopt.resamples, "bootstrap resamples (>= 100)")
        ->capture_default_str();
    analyze->add_option("--seed", aopt.seed, "bootstrap seed")->capture_default_str();
    analyze->add_option("--threads", aopt.threads, "worker threads")->capture_default_str();
    analyze->add_option("--output-dir", aopt.output_dir, "directory for report.json/curve.csv/plot.dat")
        ->capture_default_str();

    mspin::WalkConfig wopt;
    std::string model_name = "pm1";
    std::string sim_output = "panel.csv";
    std::string start_price_text;
    std::string start_date_text = "2000-01-03";
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic random-walk panel as ingestion CSV");
    simulate->add_option("--model", model_name, "pm1 | gauss | geom")->capture_default_str();
    simulate->add_option("--walkers", wopt.n_walkers, "number of independent walkers")->required();
    simulate->add_option("--steps", wopt.n_steps, "number of steps (days after the base day)")->required();
    simulate->add_option("--sigma", wopt.sigma, "step scale for gauss/geom")->capture_default_str();
    simulate->add_option("--start", start_price_text, "start price (default: steps+100 for pm1, 100 otherwise)");
    simulate->add_option("--start-date", start_date_text, "base-day calendar date")->capture_default_str();
    simulate->add_option("--seed", wopt.seed, "panel seed")->required();
    simulate->add_option("--threads", wopt.threads, "worker threads")->capture_default_str();
    simulate->add_option("--output", sim_output, "output CSV path")->capture_default_str();

    int oracle_t_max = 20;
    int oracle_cap = 64;
    auto* oracle = app.add_subcommand("oracle", "Print exact +-1-walk survival probabilities");
    oracle->add_option("--t-max", oracle_t_max, "largest spin time to print")->capture_default_str();
    oracle->add_option("--cap", oracle_cap, "survival table cap")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (analyze->parsed()) {
            if (fit_max >= 0) aopt.fit_t_max = fit_max;
            return run_analyze(aopt);
        }
        if (simulate->parsed()) {
            wopt.model = mspin::parse_step_model(model_name);
            if (start_price_text.empty()) {
                wopt.start_price = wopt.model == mspin::StepModel::PlusMinusOne
                                       ? mspin::Decimal::from_int(wopt.n_steps > 0 ? wopt.n_steps + 100 : 100)
                                       : mspin::Decimal::from_int(100);
            } else {
                wopt.start_price = mspin::Decimal::parse(start_price_text);
            }
            wopt.start_date = mspin::Date::parse(start_date_text);
            return run_simulate(wopt, sim_output);
        }
        return run_oracle(oracle_t_max, oracle_cap);
    } catch (const mspin::NoWindowsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoData;
    } catch (const mspin::FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const mspin::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
