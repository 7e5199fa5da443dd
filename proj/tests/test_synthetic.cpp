#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "marketspin/market_model.hpp"
#include "marketspin/synthetic.hpp"

using mspin::Decimal;
using mspin::DyadicProbability;
using mspin::StepModel;
using mspin::SurvivalTable;
using mspin::WalkConfig;

namespace {

// Independent oracle: enumerate every +-1 price path of t+1 steps and count
// the ones whose spin (sign vs the day-0 base, ties -> +1) never leaves its
// t=0 state. Exact dyadic result, no DP, no shared code with SurvivalTable.
DyadicProbability enumerate_survival(int t) {
    const std::int64_t base = 1 << 20; // far from zero
    std::int64_t paths = 1LL << (t + 1);
    std::int64_t surviving = 0;
    for (std::int64_t mask = 0; mask < paths; ++mask) {
        std::int64_t price = base;
        int initial = 0;
        bool persisted = true;
        for (int step = 0; step <= t; ++step) {
            price += (mask >> step) & 1 ? 1 : -1;
            int spin = price >= base ? +1 : -1;
            if (step == 0)
                initial = spin;
            else if (spin != initial)
                persisted = false;
        }
        if (persisted) ++surviving;
    }
    DyadicProbability p;
    p.num = static_cast<unsigned __int128>(surviving);
    p.log2_den = t + 1;
    while (p.log2_den > 0 && p.num % 2 == 0) {
        p.num /= 2;
        --p.log2_den;
    }
    return p;
}

} // namespace

TEST_CASE("exact survival matches exhaustive enumeration for t <= 12") {
    SurvivalTable table(16);
    for (int t = 0; t <= 12; ++t) {
        auto dp = table.survival(t);
        auto brute = enumerate_survival(t);
        INFO("t = " << t << ": dp = " << dp.str() << ", enumeration = " << brute.str());
        REQUIRE(dp.num == brute.num);
        REQUIRE(dp.log2_den == brute.log2_den);
    }
}

TEST_CASE("exact survival anchor values") {
    SurvivalTable table; // default cap 64
    CHECK(table.cap() == 64);
    CHECK(table.survival(0).str() == "1");
    CHECK(table.survival(1).str() == "3/4"); // up-walker survives both continuations,
                                             // down-walker one of two
    CHECK(table.survival(1).value() == 0.75);
    CHECK(table.survival(2).str() == "5/8");
    CHECK_THROWS_AS(table.survival(65), mspin::ConfigError);
    CHECK_THROWS_AS(table.survival(-1), mspin::ConfigError);
    CHECK_THROWS_AS(SurvivalTable(121), mspin::ConfigError);
}

TEST_CASE("exact survival log-log slope approaches -1/2") {
    SurvivalTable table(64);
    // OLS slope of ln survival vs ln t over t in [8, 64]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int t = 8; t <= 64; ++t) {
        double x = std::log(static_cast<double>(t));
        double y = std::log(table.survival(t).value());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    INFO("slope = " << slope);
    CHECK(slope <= -0.4);
    CHECK(slope >= -0.6);
}

TEST_CASE("reference curve evaluates each dimension branch") {
    CHECK(mspin::reference_value(1.0, 4.0) == Catch::Approx(0.125).epsilon(1e-12));
    CHECK(mspin::reference_value(3.0, 4.0) == Catch::Approx(0.125).epsilon(1e-12));
    double e = std::exp(1.0);
    CHECK(mspin::reference_value(2.0, e) == Catch::Approx(1.0 / e).epsilon(1e-12));
    CHECK_THROWS_AS(mspin::reference_value(2.0, 1.0), mspin::Error);
    CHECK_THROWS_AS(mspin::reference_value(-1.0, 4.0), mspin::Error);
    CHECK_THROWS_AS(mspin::reference_value(1.0, 0.5), mspin::Error);
    auto values = mspin::reference_curve(1.0, {1, 4, 9});
    CHECK(values.size() == 3);
    CHECK(values[0] == 1.0);
    CHECK(values[1] == Catch::Approx(0.125));
}

TEST_CASE("walk config validation") {
    WalkConfig config;
    config.n_walkers = 0;
    CHECK_THROWS_AS(config.validate(), mspin::ConfigError);
    config = WalkConfig{};
    config.n_steps = 0;
    CHECK_THROWS_AS(config.validate(), mspin::ConfigError);
    config = WalkConfig{};
    config.model = StepModel::Gaussian;
    config.sigma = 0.0;
    CHECK_THROWS_AS(config.validate(), mspin::ConfigError);
    // pm1 positivity precondition: start_price > n_steps
    config = WalkConfig{};
    config.model = StepModel::PlusMinusOne;
    config.n_steps = 2000;
    config.start_price = Decimal::from_int(1000);
    CHECK_THROWS_AS(config.validate(), mspin::ConfigError);
    config.start_price = Decimal::parse("2000.5");
    CHECK_THROWS_AS(config.validate(), mspin::ConfigError); // integer required
    config.start_price = Decimal::from_int(2001);
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("simulated panel shape and determinism") {
    WalkConfig config;
    config.n_walkers = 23;
    config.n_steps = 17;
    config.model = StepModel::PlusMinusOne;
    config.start_price = Decimal::from_int(100);
    config.seed = 7;

    auto panel = mspin::simulate_walk_panel(config);
    panel.validate();
    CHECK(panel.companies() == 23);
    CHECK(panel.grid_days() == 18);
    CHECK(panel.series.front().closes.front() == Decimal::from_int(100));
    for (const auto& series : panel.series)
        for (std::size_t k = 1; k < series.closes.size(); ++k) {
            std::int64_t step = series.closes[k].to_int64() - series.closes[k - 1].to_int64();
            REQUIRE((step == 1 || step == -1));
        }

    auto again = mspin::simulate_walk_panel(config);
    for (std::size_t i = 0; i < panel.series.size(); ++i) {
        REQUIRE(panel.series[i].ticker == again.series[i].ticker);
        REQUIRE(panel.series[i].closes == again.series[i].closes);
    }

    config.threads = 4;
    auto threaded = mspin::simulate_walk_panel(config);
    for (std::size_t i = 0; i < panel.series.size(); ++i)
        REQUIRE(panel.series[i].closes == threaded.series[i].closes);

    config.seed = 8;
    auto reseeded = mspin::simulate_walk_panel(config);
    bool any_difference = false;
    for (std::size_t i = 0; i < panel.series.size(); ++i)
        if (panel.series[i].closes != reseeded.series[i].closes) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("gaussian and geometric walks quantize to positive decimals") {
    WalkConfig config;
    config.n_walkers = 5;
    config.n_steps = 50;
    config.model = StepModel::Gaussian;
    config.sigma = 1.0;
    config.start_price = Decimal::from_int(500);
    config.seed = 11;
    auto panel = mspin::simulate_walk_panel(config);
    panel.validate(); // positivity and alignment

    config.model = StepModel::Geometric;
    config.sigma = 0.05;
    auto geometric = mspin::simulate_walk_panel(config);
    geometric.validate();

    // sigma -> 0 limit: constant prices, R(t) = 1 after mapping
    config.model = StepModel::Gaussian;
    config.sigma = 1e-12;
    auto flat = mspin::simulate_walk_panel(config);
    auto curve = mspin::window_persistence_curve(flat);
    for (double density : curve.density) REQUIRE(density == 1.0);
}

TEST_CASE("streaming persistence curve equals the materialized pipeline") {
    for (auto model : {StepModel::PlusMinusOne, StepModel::Geometric}) {
        WalkConfig config;
        config.n_walkers = 200;
        config.n_steps = 40;
        config.model = model;
        config.sigma = 0.02;
        config.start_price = Decimal::from_int(300);
        config.seed = 5;

        auto direct = mspin::simulate_persistence_curve(config);
        auto materialized = mspin::window_persistence_curve(mspin::simulate_walk_panel(config));
        REQUIRE(direct.counts == materialized.counts);

        config.threads = 3;
        auto threaded = mspin::simulate_persistence_curve(config);
        REQUIRE(direct.counts == threaded.counts);
    }
}

TEST_CASE("pm1 null model converges to the exact survival oracle") {
    WalkConfig config;
    config.n_walkers = 20000;
    config.n_steps = 32;
    config.model = StepModel::PlusMinusOne;
    config.start_price = Decimal::from_int(100);
    config.seed = 271828;

    auto curve = mspin::simulate_persistence_curve(config);
    SurvivalTable table(32);
    for (int t = 0; t <= 20; ++t) {
        double exact = table.survival(t).value();
        double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(config.n_walkers));
        INFO("t=" << t << " empirical=" << curve.density[static_cast<std::size_t>(t)]
                  << " exact=" << exact);
        REQUIRE(std::abs(curve.density[static_cast<std::size_t>(t)] - exact) <= 4.0 * se + 1e-15);
    }
}
