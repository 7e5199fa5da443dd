#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "marketspin/common.hpp"
#include "marketspin/market_model.hpp"
#include "marketspin/parallel.hpp"
#include "marketspin/rng.hpp"

namespace mspin {

/// One log-log OLS segment. slope estimates the negated decay exponent.
struct SegmentFit {
    double slope = 0.0;
    double intercept = 0.0; // log-space
    std::int64_t t_lo = 0, t_hi = 0;
    double slope_stderr = 0.0;
    double sse = 0.0; // sum of squared log residuals
    std::size_t n_points = 0;
};

struct DoublePowerLawFit {
    SegmentFit short_segment; // [t_min, breakpoint]
    SegmentFit long_segment;  // [breakpoint+1, t_max]
    std::int64_t breakpoint = 0;
    double total_sse = 0.0;
    double single_fit_sse = 0.0;
};

namespace detail {

/// Neumaier-compensated sum; SSE comparisons between nested fits rely on
/// well-conditioned accumulation.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

inline void check_fit_range(const PersistenceCurve& curve, std::int64_t t_lo, std::int64_t t_hi) {
    if (t_lo < 1) throw FitError("fit range must start at t >= 1");
    if (t_hi >= static_cast<std::int64_t>(curve.size()))
        throw FitError("fit range exceeds curve support");
    if (t_hi - t_lo + 1 < 3) throw FitError("fit needs at least 3 points");
    for (std::int64_t t = t_lo; t <= t_hi; ++t)
        if (!(curve.density[static_cast<std::size_t>(t)] > 0.0))
            throw FitError("zero density in fit range");
}

/// Unweighted OLS of log R(t) on log t over integer t in [t_lo, t_hi].
/// Range validity is the caller's job (check_fit_range).
inline SegmentFit ols_loglog(const PersistenceCurve& curve, std::int64_t t_lo, std::int64_t t_hi) {
    std::size_t n = static_cast<std::size_t>(t_hi - t_lo + 1);
    CompensatedSum sx, sy;
    for (std::int64_t t = t_lo; t <= t_hi; ++t) {
        sx.add(std::log(static_cast<double>(t)));
        sy.add(std::log(curve.density[static_cast<std::size_t>(t)]));
    }
    double mean_x = sx.value() / static_cast<double>(n);
    double mean_y = sy.value() / static_cast<double>(n);

    CompensatedSum sxx, sxy;
    for (std::int64_t t = t_lo; t <= t_hi; ++t) {
        double dx = std::log(static_cast<double>(t)) - mean_x;
        double dy = std::log(curve.density[static_cast<std::size_t>(t)]) - mean_y;
        sxx.add(dx * dx);
        sxy.add(dx * dy);
    }

    SegmentFit fit;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.n_points = n;
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = mean_y - fit.slope * mean_x;

    CompensatedSum sse;
    for (std::int64_t t = t_lo; t <= t_hi; ++t) {
        double x = std::log(static_cast<double>(t));
        double r = std::log(curve.density[static_cast<std::size_t>(t)]) - (fit.intercept + fit.slope * x);
        sse.add(r * r);
    }
    fit.sse = std::max(0.0, sse.value());
    fit.slope_stderr = n > 2 ? std::sqrt(fit.sse / static_cast<double>(n - 2) / sxx.value()) : 0.0;
    return fit;
}

} // namespace detail

/// Single power-law fit over [t_lo, t_hi] (both inclusive, in spin time).
/// The t = 0 anchor is definitional and never enters a fit.
inline SegmentFit fit_power_law(const PersistenceCurve& curve, std::int64_t t_lo, std::int64_t t_hi) {
    detail::check_fit_range(curve, t_lo, t_hi);
    return detail::ols_loglog(curve, t_lo, t_hi);
}

/// Exhaustive breakpoint search: two independent OLS segments on
/// [t_min, t*] and [t*+1, t_max], t* minimizing the total SSE, ties broken
/// toward the smallest t*. Segments are free (no continuity constraint), so
/// the best double fit can never lose to the single-segment fit.
inline DoublePowerLawFit fit_double_power_law(const PersistenceCurve& curve, std::int64_t t_min,
                                              std::int64_t t_max) {
    if (t_max - t_min < 5)
        throw FitError("double fit needs a range of at least 6 points (two 3-point segments)");
    detail::check_fit_range(curve, t_min, t_max);

    DoublePowerLawFit best;
    bool found = false;
    for (std::int64_t bp = t_min + 2; bp <= t_max - 3; ++bp) {
        SegmentFit short_segment = detail::ols_loglog(curve, t_min, bp);
        SegmentFit long_segment = detail::ols_loglog(curve, bp + 1, t_max);
        double total = short_segment.sse + long_segment.sse;
        if (!found || total < best.total_sse) {
            found = true;
            best.short_segment = short_segment;
            best.long_segment = long_segment;
            best.breakpoint = bp;
            best.total_sse = total;
        }
    }
    if (!found) throw FitError("no admissible breakpoint");
    best.single_fit_sse = detail::ols_loglog(curve, t_min, t_max).sse;
    return best;
}

/// Summary of one bootstrapped statistic.
struct DistributionSummary {
    double mean = 0.0;
    double std_error = 0.0; // sample sd of the bootstrap distribution
    double ci_low = 0.0;    // 2.5th percentile
    double ci_high = 0.0;   // 97.5th percentile
};

struct BootstrapOptions {
    std::int64_t t_min = 1;
    std::int64_t t_max = 0;
    std::size_t n_resamples = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct BootstrapSummary {
    DistributionSummary short_slope;
    DistributionSummary long_slope;
    DistributionSummary breakpoint;
    std::size_t n_resamples = 0; // resamples kept
    std::size_t n_degenerate = 0; // excluded: zero density inside the fit range
};

namespace detail {

inline double percentile(const std::vector<double>& sorted, double q) {
    // linear interpolation between order statistics
    if (sorted.empty()) return 0.0;
    double idx = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline DistributionSummary summarize(std::vector<double> values) {
    DistributionSummary s;
    if (values.empty()) return s;
    CompensatedSum sum;
    for (double v : values) sum.add(v);
    s.mean = sum.value() / static_cast<double>(values.size());
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) sq.add((v - s.mean) * (v - s.mean));
        s.std_error = std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
    }
    std::sort(values.begin(), values.end());
    s.ci_low = percentile(values, 0.025);
    s.ci_high = percentile(values, 0.975);
    return s;
}

} // namespace detail

/// Case resampling of companies (with replacement, within each window),
/// refitting the double power law per resample. Resample r draws from
/// substream (seed, r), so results do not depend on thread count or
/// completion order. Degenerate resamples (zero density inside the fit
/// range) are excluded and counted.
inline BootstrapSummary bootstrap_slopes(const std::vector<SampleWindow>& windows,
                                         const BootstrapOptions& options) {
    if (windows.empty()) throw Error("bootstrap needs at least one window");
    if (options.n_resamples < 100) throw Error("bootstrap needs n_resamples >= 100");
    std::size_t support = windows.front().grid_days() - 1;
    for (const auto& window : windows) support = std::min(support, window.grid_days() - 1);
    if (options.t_min < 1 || options.t_max >= static_cast<std::int64_t>(support) ||
        options.t_max - options.t_min < 5)
        throw Error("bootstrap fit range is outside the common curve support");

    // Only the first-flip times matter for recounting; trajectories are
    // mapped once per window and the spins themselves are discarded.
    std::vector<std::vector<std::int64_t>> window_flips(windows.size()); // -1: never flipped
    std::vector<std::size_t> window_horizon(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto& window = windows[w];
        window_horizon[w] = window.grid_days() - 1;
        window_flips[w].resize(window.series.size());
        parallel_for(window.series.size(), options.threads, [&](std::size_t i) {
            auto trajectory = build_spin_trajectory(window.series[i], window.base_prices[i]);
            window_flips[w][i] =
                trajectory.first_flip ? static_cast<std::int64_t>(*trajectory.first_flip) : -1;
        });
    }

    struct ResampleResult {
        double short_slope = 0.0, long_slope = 0.0, breakpoint = 0.0;
        bool degenerate = false;
    };
    std::vector<ResampleResult> results(options.n_resamples);

    parallel_for(options.n_resamples, options.threads, [&](std::size_t r) {
        auto gen = rng::Xoshiro256pp::substream(options.seed, r);
        std::vector<PersistenceCurve> curves(windows.size());
        for (std::size_t w = 0; w < windows.size(); ++w) {
            std::size_t n = window_flips[w].size();
            std::vector<std::int64_t> flips_at(window_horizon[w], 0);
            for (std::size_t i = 0; i < n; ++i) {
                std::int64_t flip = window_flips[w][gen.next() % n];
                if (flip >= 0) ++flips_at[static_cast<std::size_t>(flip)];
            }
            curves[w] = detail::curve_from_flip_histogram(flips_at, static_cast<std::int64_t>(n));
        }
        PersistenceCurve curve = curves.size() == 1 ? std::move(curves.front())
                                                    : average_curves(curves);
        try {
            DoublePowerLawFit fit = fit_double_power_law(curve, options.t_min, options.t_max);
            results[r].short_slope = fit.short_segment.slope;
            results[r].long_slope = fit.long_segment.slope;
            results[r].breakpoint = static_cast<double>(fit.breakpoint);
        } catch (const FitError&) {
            results[r].degenerate = true;
        }
    });

    std::vector<double> short_slopes, long_slopes, breakpoints;
    BootstrapSummary summary;
    for (const auto& result : results) {
        if (result.degenerate) {
            ++summary.n_degenerate;
            continue;
        }
        short_slopes.push_back(result.short_slope);
        long_slopes.push_back(result.long_slope);
        breakpoints.push_back(result.breakpoint);
    }
    summary.n_resamples = short_slopes.size();
    if (summary.n_resamples == 0) throw FitError("all bootstrap resamples were degenerate");
    summary.short_slope = detail::summarize(std::move(short_slopes));
    summary.long_slope = detail::summarize(std::move(long_slopes));
    summary.breakpoint = detail::summarize(std::move(breakpoints));
    return summary;
}

} // namespace mspin
