#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marketspin/common.hpp"
#include "marketspin/date.hpp"
#include "marketspin/decimal.hpp"
#include "marketspin/parallel.hpp"

namespace mspin {

/// One company's dated end-of-day closing prices. Index 0 is the base day.
struct PriceSeries {
    std::string ticker;
    std::vector<Date> dates;
    std::vector<Decimal> closes;

    void validate() const {
        if (closes.size() < 2)
            throw Error("price series '" + ticker + "' needs a base day plus at least one observation");
        if (dates.size() != closes.size())
            throw Error("price series '" + ticker + "': dates/closes length mismatch");
        for (std::size_t i = 0; i < closes.size(); ++i) {
            if (!closes[i].positive())
                throw Error("price series '" + ticker + "': non-positive close " + closes[i].str());
            if (i > 0 && !(dates[i - 1] < dates[i]))
                throw Error("price series '" + ticker + "': dates not strictly increasing at " +
                            dates[i].str());
        }
    }
};

/// A panel of aligned price series over one analysis window.
struct SampleWindow {
    std::string label;
    std::vector<PriceSeries> series;    // identical date grids
    std::vector<Decimal> base_prices;   // close on the window's day 0, per series

    void validate() const {
        if (series.empty()) throw Error("sample window '" + label + "' has no series");
        if (base_prices.size() != series.size())
            throw Error("sample window '" + label + "': base price count mismatch");
        const auto& grid = series.front().dates;
        for (std::size_t i = 0; i < series.size(); ++i) {
            series[i].validate();
            if (series[i].dates != grid)
                throw Error("sample window '" + label + "': series '" + series[i].ticker +
                            "' is not on the common date grid");
            if (!(base_prices[i] == series[i].closes.front()))
                throw Error("sample window '" + label + "': base price of '" + series[i].ticker +
                            "' does not equal its day-0 close");
        }
    }

    std::size_t companies() const { return series.size(); }
    std::size_t grid_days() const { return series.empty() ? 0 : series.front().dates.size(); }
};

/// A company's spin history. Spin time t corresponds to calendar day t+1;
/// the base day carries no spin. first_flip is the smallest t >= 1 whose
/// spin differs from the t=0 spin; absent when the spin never flips.
struct SpinTrajectory {
    std::string ticker;
    std::vector<std::int8_t> spins; // +1 / -1
    std::optional<std::size_t> first_flip;
};

/// Never-flipped counts and their density. For sample_count == 1 the counts
/// are exact and density[t]*total == counts[t]; for averaged curves density
/// is the unweighted mean across windows (counts/total are the plain sums and
/// need not reproduce it when window sizes differ).
struct PersistenceCurve {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
    std::vector<double> density;
    std::size_t sample_count = 1;

    std::size_t size() const { return density.size(); }

    /// A bare density curve (no underlying counts); used for synthetic
    /// inputs to the fitting routines.
    static PersistenceCurve from_density(std::vector<double> values) {
        PersistenceCurve curve;
        curve.density = std::move(values);
        return curve;
    }
};

/// The sign convention: +1 when the base price does not exceed the EOD
/// price, -1 otherwise. A price exactly equal to the base maps to +1, so a
/// spin sitting at -1 flips on touching the base while a +1 spin does not.
inline int map_to_spin(const Decimal& base_price, const Decimal& eod_price) {
    if (!base_price.positive())
        throw Error("non-positive base price: " + base_price.str());
    if (!eod_price.positive())
        throw Error("non-positive EOD price: " + eod_price.str());
    return base_price <= eod_price ? +1 : -1;
}

/// Maps a series onto spins relative to its day-0 base price and finds the
/// first flip. closes[0] is the base day; spins[t] describes closes[t+1].
inline SpinTrajectory build_spin_trajectory(const PriceSeries& series, const Decimal& base_price) {
    if (series.closes.size() < 2)
        throw Error("price series '" + series.ticker + "' needs a base day plus at least one observation");
    if (!(base_price == series.closes.front()))
        throw Error("base price " + base_price.str() + " does not equal the day-0 close " +
                    series.closes.front().str());
    SpinTrajectory trajectory;
    trajectory.ticker = series.ticker;
    std::size_t horizon = series.closes.size() - 1;
    trajectory.spins.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        int spin = map_to_spin(base_price, series.closes[t + 1]);
        trajectory.spins[t] = static_cast<std::int8_t>(spin);
        if (!trajectory.first_flip && t >= 1 && trajectory.spins[t] != trajectory.spins[0])
            trajectory.first_flip = t;
    }
    return trajectory;
}

namespace detail {

/// n(t) = N - #{first_flip <= t} from a flips-at-t histogram.
inline PersistenceCurve curve_from_flip_histogram(const std::vector<std::int64_t>& flips_at,
                                                  std::int64_t total) {
    PersistenceCurve curve;
    curve.total = total;
    curve.counts.resize(flips_at.size());
    curve.density.resize(flips_at.size());
    std::int64_t alive = total;
    for (std::size_t t = 0; t < flips_at.size(); ++t) {
        alive -= flips_at[t];
        curve.counts[t] = alive;
        curve.density[t] = static_cast<double>(alive) / static_cast<double>(total);
    }
    return curve;
}

} // namespace detail

/// Counts trajectories that have not flipped by each t. n(0) = N always,
/// since a flip needs t >= 1; the curve is monotone non-increasing.
inline PersistenceCurve persistence_curve(const std::vector<SpinTrajectory>& trajectories) {
    if (trajectories.empty()) throw Error("persistence curve needs at least one trajectory");
    std::size_t horizon = trajectories.front().spins.size();
    if (horizon == 0) throw Error("persistence curve needs trajectories of length >= 1");
    for (const auto& trajectory : trajectories)
        if (trajectory.spins.size() != horizon)
            throw Error("trajectories of mixed lengths: '" + trajectory.ticker + "'");

    std::vector<std::int64_t> flips_at(horizon, 0);
    for (const auto& trajectory : trajectories)
        if (trajectory.first_flip) ++flips_at[*trajectory.first_flip];
    return detail::curve_from_flip_histogram(flips_at, static_cast<std::int64_t>(trajectories.size()));
}

/// Trajectories for every series in a window (parallel per company),
/// reduced to the window's persistence curve.
inline PersistenceCurve window_persistence_curve(const SampleWindow& window, unsigned threads = 1) {
    std::vector<SpinTrajectory> trajectories(window.series.size());
    parallel_for(window.series.size(), threads, [&](std::size_t i) {
        trajectories[i] = build_spin_trajectory(window.series[i], window.base_prices[i]);
    });
    return persistence_curve(trajectories);
}

/// Pointwise unweighted mean of the densities, truncated to the shortest
/// curve so the sample count is constant along the whole output (a mid-curve
/// change of support would fake a shoulder).
inline PersistenceCurve average_curves(const std::vector<PersistenceCurve>& curves) {
    if (curves.empty()) throw Error("average of zero curves");
    std::size_t length = curves.front().size();
    for (const auto& curve : curves) length = std::min(length, curve.size());
    if (length == 0) throw Error("average of empty curves");

    PersistenceCurve out;
    out.sample_count = curves.size();
    out.counts.assign(length, 0);
    out.density.assign(length, 0.0);
    for (const auto& curve : curves) {
        out.total += curve.total;
        for (std::size_t t = 0; t < length; ++t) {
            if (t < curve.counts.size()) out.counts[t] += curve.counts[t];
            out.density[t] += curve.density[t];
        }
    }
    for (std::size_t t = 0; t < length; ++t)
        out.density[t] /= static_cast<double>(curves.size());
    return out;
}

} // namespace mspin
