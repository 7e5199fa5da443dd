#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "marketspin/common.hpp"
#include "marketspin/market_model.hpp"
#include "marketspin/parallel.hpp"
#include "marketspin/rng.hpp"

namespace mspin {

enum class StepModel {
    PlusMinusOne,  // price +- 1 per day, integer prices
    Gaussian,      // additive increments sigma * z
    Geometric,     // multiplicative exp(sigma * z)
};

inline std::string to_string(StepModel model) {
    switch (model) {
    case StepModel::PlusMinusOne: return "pm1";
    case StepModel::Gaussian: return "gauss";
    case StepModel::Geometric: return "geom";
    }
    return "?";
}

inline StepModel parse_step_model(std::string_view name) {
    if (name == "pm1") return StepModel::PlusMinusOne;
    if (name == "gauss") return StepModel::Gaussian;
    if (name == "geom") return StepModel::Geometric;
    throw ConfigError("unknown step model '" + std::string(name) + "' (expected pm1|gauss|geom)");
}

struct WalkConfig {
    std::int64_t n_walkers = 1;
    std::int64_t n_steps = 1;
    StepModel model = StepModel::PlusMinusOne;
    double sigma = 1.0;                       // gauss/geom only
    Decimal start_price = Decimal::from_int(1000);
    std::uint64_t seed = 0;
    Date start_date{2000, 1, 3};
    unsigned threads = 1;

    void validate() const {
        if (n_walkers < 1) throw ConfigError("n_walkers must be >= 1");
        if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
        if (!start_price.positive()) throw ConfigError("start price must be positive");
        if (model != StepModel::PlusMinusOne && !(sigma > 0.0))
            throw ConfigError("sigma must be positive");
        if (model == StepModel::PlusMinusOne) {
            if (!start_price.is_integer())
                throw ConfigError("pm1 walk needs an integer start price");
            // +-1 walks must not be able to reach zero.
            if (!(Decimal::from_int(n_steps) < start_price))
                throw ConfigError("pm1 walk needs start price > n_steps to stay positive");
        }
    }
};

namespace detail {

/// Quantized prices make panels exact: closes survive a CSV round trip
/// bit-identically. Gaussian/geometric prices carry 6 fractional digits.
inline constexpr int kSimPriceDigits = 6;

inline Decimal quantize_price(double price) {
    Decimal d = Decimal::from_double(price, kSimPriceDigits);
    if (!d.positive())
        throw ConfigError("simulated price reached " + d.str() +
                          "; raise the start price or lower sigma");
    return d;
}

} // namespace detail

/// One walker's closes, including the day-0 base value at index 0.
/// Walker substreams depend only on (seed, walker index).
inline std::vector<Decimal> simulate_walk_closes(const WalkConfig& config, std::int64_t walker) {
    auto gen = rng::Xoshiro256pp::substream(config.seed, static_cast<std::uint64_t>(walker));
    std::vector<Decimal> closes;
    closes.reserve(static_cast<std::size_t>(config.n_steps) + 1);
    switch (config.model) {
    case StepModel::PlusMinusOne: {
        // Integer lattice walk; start_price > n_steps keeps it positive.
        std::int64_t price = config.start_price.to_int64();
        closes.push_back(config.start_price);
        for (std::int64_t k = 0; k < config.n_steps; ++k) {
            price += gen.coin() ? 1 : -1;
            closes.push_back(Decimal::from_int(price));
        }
        break;
    }
    case StepModel::Gaussian: {
        double price = config.start_price.to_double();
        closes.push_back(detail::quantize_price(price));
        for (std::int64_t k = 0; k < config.n_steps; ++k) {
            price += config.sigma * gen.gaussian();
            closes.push_back(detail::quantize_price(price));
        }
        break;
    }
    case StepModel::Geometric: {
        double log_price = std::log(config.start_price.to_double());
        closes.push_back(detail::quantize_price(std::exp(log_price)));
        for (std::int64_t k = 0; k < config.n_steps; ++k) {
            log_price += config.sigma * gen.gaussian();
            closes.push_back(detail::quantize_price(std::exp(log_price)));
        }
        break;
    }
    }
    return closes;
}

inline std::string walker_ticker(std::int64_t walker, std::int64_t n_walkers) {
    int width = 1;
    for (std::int64_t v = n_walkers - 1; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(walker);
    return "W" + std::string(width - static_cast<int>(digits.size()), '0') + digits;
}

/// Consecutive calendar days starting at config.start_date.
inline std::vector<Date> simulation_dates(const WalkConfig& config) {
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(config.n_steps) + 1);
    for (std::int64_t k = 0; k <= config.n_steps; ++k)
        dates.push_back(config.start_date.plus_days(k));
    return dates;
}

/// Full panel of independent walkers as one SampleWindow. Same seed, same
/// panel, regardless of thread count.
inline SampleWindow simulate_walk_panel(const WalkConfig& config) {
    config.validate();
    auto dates = simulation_dates(config);
    SampleWindow window;
    window.label = "sim-" + to_string(config.model) + "-" + std::to_string(config.seed);
    window.series.resize(static_cast<std::size_t>(config.n_walkers));
    window.base_prices.resize(static_cast<std::size_t>(config.n_walkers));
    parallel_for(static_cast<std::size_t>(config.n_walkers), config.threads, [&](std::size_t i) {
        PriceSeries series;
        series.ticker = walker_ticker(static_cast<std::int64_t>(i), config.n_walkers);
        series.dates = dates;
        series.closes = simulate_walk_closes(config, static_cast<std::int64_t>(i));
        window.base_prices[i] = series.closes.front();
        window.series[i] = std::move(series);
    });
    return window;
}

/// Streaming composition of simulate_walk_panel with the spin pipeline:
/// produces the identical curve without materializing the panel, so large
/// null-model runs stay in O(n_steps) memory per thread.
inline PersistenceCurve simulate_persistence_curve(const WalkConfig& config) {
    config.validate();
    std::size_t horizon = static_cast<std::size_t>(config.n_steps);
    unsigned k = config.threads > 1 ? config.threads : 1;
    std::vector<std::vector<std::int64_t>> flips_at(k, std::vector<std::int64_t>(horizon, 0));

    std::vector<Date> dates = simulation_dates(config);
    parallel_for(k, k, [&](std::size_t part) {
        std::size_t n = static_cast<std::size_t>(config.n_walkers);
        std::size_t lo = n * part / k, hi = n * (part + 1) / k;
        PriceSeries series;
        series.dates = dates;
        for (std::size_t i = lo; i < hi; ++i) {
            series.ticker = walker_ticker(static_cast<std::int64_t>(i), config.n_walkers);
            series.closes = simulate_walk_closes(config, static_cast<std::int64_t>(i));
            auto trajectory = build_spin_trajectory(series, series.closes.front());
            if (trajectory.first_flip) ++flips_at[part][*trajectory.first_flip];
        }
    });

    std::vector<std::int64_t> merged(horizon, 0);
    for (std::size_t part = 0; part < k; ++part)
        for (std::size_t t = 0; t < horizon; ++t) merged[t] += flips_at[part][t];
    return detail::curve_from_flip_histogram(merged, config.n_walkers);
}

/// Exact dyadic probability num / 2^log2_den, kept reduced.
struct DyadicProbability {
    unsigned __int128 num = 1;
    int log2_den = 0;

    double value() const {
        return static_cast<double>(num) * std::pow(2.0, -log2_den);
    }

    std::string str() const {
        if (log2_den == 0) return u128_str(num);
        unsigned __int128 den = static_cast<unsigned __int128>(1) << log2_den;
        return u128_str(num) + "/" + u128_str(den);
    }

    static std::string u128_str(unsigned __int128 v) {
        if (v == 0) return "0";
        std::string out;
        while (v > 0) {
            out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
            v /= 10;
        }
        return out;
    }
};

/// Exact survival probabilities of the +-1 symmetric walk under the spin
/// tie rule (price equal to base maps to +1). DP over lattice positions
/// with exact 128-bit path counts; cap <= 120 keeps counts within range.
class SurvivalTable {
public:
    static constexpr int kMaxCap = 120;

    explicit SurvivalTable(int cap = 64) : cap_(cap) {
        if (cap < 0 || cap > kMaxCap)
            throw ConfigError("survival table cap must be in [0, " + std::to_string(kMaxCap) + "]");
        // An up-start (+1 after the first step) survives while the price
        // stays at or above the base; a down-start survives while strictly
        // below. Relative to the barrier both are "never go below 0" counts,
        // started at 1 and 0 respectively.
        up_ = never_below_zero_counts(1, cap_);
        down_ = never_below_zero_counts(0, cap_);
    }

    int cap() const { return cap_; }

    /// P(no flip through spin time t); t=0 is the anchor, probability 1.
    DyadicProbability survival(int t) const {
        if (t < 0) throw ConfigError("survival time must be >= 0");
        if (t > cap_)
            throw ConfigError("survival time " + std::to_string(t) + " above table cap " +
                              std::to_string(cap_));
        DyadicProbability p;
        p.num = up_[static_cast<std::size_t>(t)] + down_[static_cast<std::size_t>(t)];
        p.log2_den = t + 1; // 2^(t+1) equally likely price paths of length t+1
        while (p.log2_den > 0 && p.num % 2 == 0) {
            p.num /= 2;
            --p.log2_den;
        }
        return p;
    }

private:
    // counts[t] = number of t-step +-1 paths from `start` whose every
    // position stays >= 0.
    static std::vector<unsigned __int128> never_below_zero_counts(int start, int cap) {
        std::vector<unsigned __int128> counts(static_cast<std::size_t>(cap) + 1);
        std::vector<unsigned __int128> alive(static_cast<std::size_t>(start + cap) + 2, 0);
        alive[static_cast<std::size_t>(start)] = 1;
        counts[0] = 1;
        for (int t = 1; t <= cap; ++t) {
            std::vector<unsigned __int128> next(alive.size(), 0);
            for (std::size_t x = 0; x < alive.size(); ++x) {
                if (alive[x] == 0) continue;
                if (x + 1 < next.size()) next[x + 1] += alive[x];
                if (x >= 1) next[x - 1] += alive[x];
            }
            alive.swap(next);
            unsigned __int128 total = 0;
            for (auto c : alive) total += c;
            counts[static_cast<std::size_t>(t)] = total;
        }
        return counts;
    }

    int cap_;
    std::vector<unsigned __int128> up_;
    std::vector<unsigned __int128> down_;
};

/// Dimension-branch reference decay shapes (unnormalized):
/// t^(d/2-2) for d < 2, 1/(t ln^2 t) for d = 2, t^(-d/2) for d > 2.
inline double reference_value(double d, double t) {
    if (!(d > 0.0)) throw Error("dimension must be positive");
    if (!(t >= 1.0)) throw Error("reference curve needs t >= 1");
    if (d < 2.0) return std::pow(t, d / 2.0 - 2.0);
    if (d == 2.0) {
        if (t == 1.0) throw Error("d = 2 reference undefined at t = 1 (ln 1 = 0)");
        double lt = std::log(t);
        return 1.0 / (t * lt * lt);
    }
    return std::pow(t, -d / 2.0);
}

inline std::vector<double> reference_curve(double d, const std::vector<std::int64_t>& ts) {
    std::vector<double> out;
    out.reserve(ts.size());
    for (auto t : ts) out.push_back(reference_value(d, static_cast<double>(t)));
    return out;
}

} // namespace mspin
