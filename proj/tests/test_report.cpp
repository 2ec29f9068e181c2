#include <catch_amalgamated.hpp>

#include <pricopt/report.hpp>
#include <pricopt/simulator.hpp>

#include <sstream>

using namespace pricopt;
using Catch::Matchers::WithinAbs;

namespace {

Portfolio three() {
    return Portfolio({MarketQuote(1, 100, {90, 110}, -0.2, 0.2), MarketQuote(2, 80, {90, 110}, -0.2, 0.2),
                      MarketQuote(3, 120, {90, 110}, -0.2, 0.2)});
}

} // namespace

TEST_CASE("report at the baseline", "[report]") {
    const auto p = three();
    const auto m = PortfolioModel::linear({{0.5, -1.0}, {0.6, -1.0}, {0.4, -1.0}});
    const auto spec = ProblemSpec::volume({0.45, 0.55});
    const auto r = make_report(spec, p, m, std::vector<double>{0.0, 0.0, 0.0});
    CHECK(r.volume_ratio == 100.0);
    CHECK(r.count_ratio == 100.0);
    CHECK(r.n_zero == 3);
    CHECK(r.mean_delta == 0.0);
    CHECK_THAT(r.baseline_volume, WithinAbs(50 + 48 + 48, 1e-12));
    CHECK_THAT(r.baseline_count, WithinAbs(1.5, 1e-12));
}

TEST_CASE("report splits increases and decreases", "[report]") {
    const auto p = three();
    const auto m = PortfolioModel::linear({{0.5, -1.0}, {0.6, -1.0}, {0.4, -1.0}});
    const auto spec = ProblemSpec::volume({0.45, 0.55});
    const auto r = make_report(spec, p, m, std::vector<double>{0.1, -0.05, 0.0});
    CHECK(r.n_increases == 1);
    CHECK(r.n_decreases == 1);
    CHECK(r.n_zero == 1);
    CHECK_THAT(r.mean_delta, WithinAbs(100.0 * 0.05 / 3.0, 1e-12));
    CHECK_THAT(r.mean_increase, WithinAbs(10.0, 1e-12));
    CHECK_THAT(r.mean_decrease, WithinAbs(-5.0, 1e-12));
    // V = 110*0.4 + 76*0.65 + 120*0.4 = 44 + 49.4 + 48
    CHECK_THAT(r.volume_ratio, WithinAbs(100.0 * 141.4 / 146.0, 1e-10));
    CHECK_THAT(r.count_ratio, WithinAbs(100.0 * 1.45 / 1.5, 1e-10));
    CHECK_THAT(r.residuals.h1, WithinAbs(1.45 / 3 - 0.55, 1e-12));
}

TEST_CASE("market position histogram", "[report]") {
    const auto p = three();
    // Before: 100 in between, 80 cheapest, 120 most expensive.
    auto rows = premium_position_histogram(p, std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE(rows.size() == 3);
    CHECK_THAT(rows[0].before, WithinAbs(100.0 / 3, 1e-12));
    CHECK_THAT(rows[1].before, WithinAbs(100.0 / 3, 1e-12));
    CHECK_THAT(rows[2].before, WithinAbs(100.0 / 3, 1e-12));
    // After: 90 (tie, cheapest), 96 in between, 108 in between.
    rows = premium_position_histogram(p, std::vector<double>{-0.1, 0.2, -0.1});
    CHECK_THAT(rows[0].after, WithinAbs(100.0 / 3, 1e-12));
    CHECK_THAT(rows[1].after, WithinAbs(200.0 / 3, 1e-12));
    CHECK_THAT(rows[2].after, WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(premium_position_histogram(p, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("position shares sum to 100", "[report][property]") {
    SimConfig cfg;
    cfg.n = 500;
    const auto p = simulate_portfolio(cfg);
    Rng rng(5);
    std::vector<double> d(p.size());
    for (auto& x : d) x = rng.uniform(-0.2, 0.2);
    const auto rows = premium_position_histogram(p, d);
    double before = 0.0, after = 0.0;
    for (const auto& r : rows) {
        before += r.before;
        after += r.after;
    }
    CHECK_THAT(before, WithinAbs(100.0, 1e-9));
    CHECK_THAT(after, WithinAbs(100.0, 1e-9));
    // Simulated base premiums never sit at a band end.
    CHECK(rows[0].before == 0.0);
    CHECK(rows[2].before == 0.0);
}

TEST_CASE("delta distribution", "[report]") {
    const std::vector<double> d{-0.2, -0.11, 0.0, 0.04, 0.2, 0.2};
    const auto bins = delta_distribution(d, DeltaDomain::continuous());
    REQUIRE(bins.size() == 8);
    CHECK(bins[0].count == 1); // [-0.2, -0.15)
    CHECK(bins[1].count == 1); // [-0.15, -0.10)
    CHECK(bins[4].count == 2); // [0, 0.05)
    CHECK(bins[7].count == 2); // [0.15, 0.2]
    CHECK_THAT(bins[7].share, WithinAbs(100.0 / 3, 1e-12));
    CHECK(bins[7].upper == 0.2);

    const auto grid = DeltaDomain::uniform_grid(-0.2, 0.2, 0.05);
    const auto gb = delta_distribution(std::vector<double>{0.0, 0.0, 0.05}, grid);
    REQUIRE(gb.size() == 9);
    CHECK(gb[4].count == 2);
    CHECK(gb[5].count == 1);
    CHECK(gb[4].lower == gb[4].upper);

    const auto one = delta_distribution(std::vector<double>{0.0}, DeltaDomain::discrete({0.0}));
    REQUIRE(one.size() == 1);
    CHECK(one[0].share == 100.0);
    CHECK_THROWS_AS(delta_distribution(d, DeltaDomain::continuous(), 0.1, -0.1), ValidationError);
}

TEST_CASE("CSV writers", "[report]") {
    std::ostringstream pos;
    write_positions(pos, {{Position::Cheapest, 25.0, 50.0}});
    CHECK(pos.str() == "position,before_pct,after_pct\ncheapest,25.0000,50.0000\n");
    std::ostringstream tr;
    write_sqp_trace(tr, {{1, 2.0, 1.5, 0.25, 1.0, 1.0}});
    CHECK(tr.str() == "iter,phi,kkt_residual,alpha\n1,1.5,0.25,1\n");

    const auto p = three();
    const auto m = PortfolioModel::step(p, {});
    std::ostringstream sol;
    write_solution(sol, p, m, std::vector<double>{0.0, 0.0, 0.0});
    std::istringstream in(sol.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}
