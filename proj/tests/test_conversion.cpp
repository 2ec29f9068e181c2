#include <catch_amalgamated.hpp>

#include <pricopt/conversion.hpp>
#include <pricopt/random.hpp>

#include <cmath>

using namespace pricopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketQuote example_quote() { return MarketQuote(1, 568, {438, 457, 477, 492, 532, 596, 654, 675, 733}, -0.2, 0.2); }

StepParams clamped() { return {0.75, 0.30, StepMode::ClampedLinear}; }
StepParams piecewise() { return {0.75, 0.30, StepMode::PiecewiseConstant}; }

MarketQuote random_quote(Rng& rng) {
    std::vector<double> comps;
    const double base = rng.uniform(400, 2000);
    for (int i = 0; i < 9; ++i) comps.push_back(base * rng.uniform(0.8, 1.2));
    comps.push_back(base * 0.7);
    return MarketQuote(1, base, comps, -rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4));
}

} // namespace

// ============================================================================
// Step model
// ============================================================================

TEST_CASE("jump points are midpoints of distinct competitor premiums", "[conversion]") {
    const auto j = jump_points(example_quote());
    const std::vector<double> expected{447.5, 467, 484.5, 512, 564, 625, 664.5, 704};
    REQUIRE(j.size() == expected.size());
    for (std::size_t i = 0; i < j.size(); ++i) CHECK(j[i] == expected[i]);

    CHECK(jump_points(MarketQuote(1, 510, {500, 520}, -0.2, 0.2)) == std::vector<double>{510});
    CHECK(jump_points(MarketQuote(1, 510, {500, 500, 520}, -0.2, 0.2)) == std::vector<double>{510});
}

TEST_CASE("clamped linear rate at the worked quote", "[conversion]") {
    const auto q = example_quote();
    const double expected = 0.75 - 0.45 * (568.0 - 438.0) / (733.0 - 438.0);
    CHECK_THAT(acceptance_prob(clamped(), q, 0.0), WithinAbs(expected, 1e-15));
    CHECK_THAT(acceptance_prob(clamped(), q, 0.0), WithinAbs(0.5517, 5e-5));
    CHECK(acceptance_at_premium(clamped(), q, 400) == 0.75);
    CHECK(acceptance_at_premium(clamped(), q, 800) == 0.30);
}

TEST_CASE("piecewise constant rate is flat between jump points", "[conversion]") {
    const auto q = example_quote();
    const double at_596 = 0.75 - 0.45 * (596.0 - 438.0) / (733.0 - 438.0);
    const double d580 = 580.0 / 568.0 - 1.0;
    CHECK_THAT(acceptance_prob(piecewise(), q, 0.0), WithinAbs(at_596, 1e-15));
    CHECK_THAT(acceptance_prob(piecewise(), q, 0.0), WithinAbs(0.50898, 5e-6));
    CHECK(acceptance_prob(piecewise(), q, 0.0) == acceptance_prob(piecewise(), q, d580));
    // Interval (564, 625] is closed on the right.
    CHECK(acceptance_at_premium(piecewise(), q, 625.0) == acceptance_at_premium(piecewise(), q, 600.0));
    CHECK(acceptance_at_premium(piecewise(), q, 625.0001) < acceptance_at_premium(piecewise(), q, 625.0));
    CHECK(acceptance_at_premium(piecewise(), q, 100) == 0.75);
    CHECK(acceptance_at_premium(piecewise(), q, 5000) == 0.30);
}

TEST_CASE("step modes agree at non-duplicate competitor premiums", "[conversion][property]") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const auto q = random_quote(rng);
        for (double p : q.sorted_competitors())
            CHECK(acceptance_at_premium(clamped(), q, p) == acceptance_at_premium(piecewise(), q, p));
    }
}

// ============================================================================
// Linear and logistic
// ============================================================================

TEST_CASE("logistic rate", "[conversion]") {
    const auto q = example_quote();
    for (double t : {-1.0, -4.0, -10.0}) CHECK(acceptance_prob(LogisticParams{0.5, t}, q, 0.0) == 0.5);
    const double expected = 1.0 / (1.0 + std::exp(0.4) / 3.0);
    CHECK_THAT(acceptance_prob(LogisticParams{0.75, -4.0}, q, 0.1), WithinRel(expected, 1e-14));
    CHECK_THAT(acceptance_prob(LogisticParams{0.75, -4.0}, q, 0.1), WithinAbs(0.66788, 5e-6));
}

TEST_CASE("gradients", "[conversion]") {
    const auto q = example_quote();
    CHECK_THAT(acceptance_prob_grad(LogisticParams{0.5, -4.0}, q, 0.0), WithinAbs(-1.0, 1e-15));
    CHECK(acceptance_prob_grad(LinearParams{0.5, -1.0}, q, 0.1) == -1.0);
    CHECK(acceptance_prob_grad(LinearParams{0.9, -1.0}, q, -0.15) == 0.0); // clamped at 1
    CHECK_THROWS_AS(acceptance_prob_grad(clamped(), q, 0.0), UnsupportedModelError);
}

TEST_CASE("delta outside the band is rejected", "[conversion]") {
    const auto q = example_quote();
    CHECK_THROWS_AS(acceptance_prob(clamped(), q, 0.25), DomainError);
    CHECK_THROWS_AS(acceptance_prob_grad(LogisticParams{}, q, -0.3), DomainError);
}

TEST_CASE("parameter validation", "[conversion]") {
    CHECK_THROWS_AS(validate(StepParams{0.3, 0.75}), ValidationError);
    CHECK_THROWS_AS(validate(LinearParams{0.5, 0.1}), ValidationError);
    CHECK_THROWS_AS(validate(LogisticParams{1.0, -1.0}), ValidationError);
    CHECK_THROWS_AS(validate(LogisticParams{0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(PortfolioModel({LinearParams{}, LogisticParams{}}), ValidationError);
}

TEST_CASE("logistic_from_step uses the step rate at delta = 0", "[conversion]") {
    const Portfolio p({example_quote()});
    const auto m = PortfolioModel::logistic_from_step(p, clamped(), {-3.0});
    CHECK(acceptance_prob(m[0], p[0], 0.0) == Catch::Approx(acceptance_prob(clamped(), p[0], 0.0)).epsilon(1e-14));
}

// ============================================================================
// Properties
// ============================================================================

TEST_CASE("acceptance is non-increasing and in range for every model", "[conversion][property]") {
    Rng rng(17);
    int violations = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto q = random_quote(rng);
        const double a = rng.uniform(q.delta_lower(), q.delta_upper());
        const double b = rng.uniform(q.delta_lower(), q.delta_upper());
        const double lo = std::min(a, b), hi = std::max(a, b);
        const ConversionModel models[] = {clamped(), piecewise(), LinearParams{rng.uniform(0.1, 1.0), -rng.uniform(0, 3)},
                                          LogisticParams{rng.uniform(0.05, 0.95), -rng.uniform(0.1, 10)}};
        for (const auto& m : models) {
            const double pl = acceptance_prob(m, q, lo);
            const double ph = acceptance_prob(m, q, hi);
            if (ph > pl) ++violations;
            CHECK(pl >= 0.0);
            CHECK(pl <= 1.0);
            if (std::holds_alternative<StepParams>(m)) {
                CHECK(pl >= 0.30);
                CHECK(pl <= 0.75);
            }
            if (std::holds_alternative<LogisticParams>(m)) {
                CHECK(pl > 0.0);
                CHECK(pl < 1.0);
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("logistic gradient matches central differences", "[conversion][property]") {
    Rng rng(23);
    const double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
        const auto q = random_quote(rng);
        const LogisticParams m{rng.uniform(0.05, 0.95), -rng.uniform(0.1, 10)};
        const double d = rng.uniform(q.delta_lower() + h, q.delta_upper() - h);
        const double fd = (acceptance_prob(m, q, d + h) - acceptance_prob(m, q, d - h)) / (2 * h);
        const double an = acceptance_prob_grad(m, q, d);
        CHECK(std::abs(an - fd) / (1 + std::abs(an)) < 1e-6);
    }
}
