#include <catch_amalgamated.hpp>

#include <pricopt/objectives.hpp>
#include <pricopt/random.hpp>

#include <cmath>

using namespace pricopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketQuote quote(std::int64_t id, double base) { return MarketQuote(id, base, {0.9 * base, 1.1 * base}, -0.2, 0.2); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Random logistic or linear portfolio.
struct Instance {
    Portfolio portfolio;
    PortfolioModel model;
};

Instance random_instance(Rng& rng, bool logistic, std::size_t n) {
    std::vector<MarketQuote> qs;
    std::vector<ConversionModel> ms;
    for (std::size_t j = 0; j < n; ++j) {
        qs.push_back(quote(static_cast<std::int64_t>(j + 1), rng.uniform(400, 2000)));
        if (logistic) ms.emplace_back(LogisticParams{rng.uniform(0.1, 0.9), -rng.uniform(0.5, 8)});
        else ms.emplace_back(LinearParams{rng.uniform(0.45, 0.55), -rng.uniform(0.2, 1.0)});
    }
    return {Portfolio(qs), PortfolioModel(ms)};
}

} // namespace

// ============================================================================
// Values
// ============================================================================

TEST_CASE("expected volume", "[objectives]") {
    const Portfolio p({quote(1, 100), quote(2, 200)});
    const auto m = PortfolioModel::linear({{0.5, 0.0}, {0.25, 0.0}});
    const std::vector<double> zero{0.0, 0.0};
    CHECK(expected_volume(p, m, zero) == 100.0);

    const Portfolio one({quote(1, 100)});
    const auto lm = PortfolioModel::logistic({{0.5, -5.0}});
    const std::vector<double> d{-0.1};
    CHECK_THAT(expected_volume(one, lm, d), WithinRel(90.0 * sigmoid(0.5), 1e-14));
    CHECK_THAT(expected_volume(one, lm, d), WithinAbs(56.021, 5e-4));
}

TEST_CASE("expected count", "[objectives]") {
    const Portfolio p({quote(1, 100), quote(2, 100)});
    const auto m = PortfolioModel::logistic({{0.5, -5.0}, {0.5, -5.0}});
    const std::vector<double> d{-0.1, 0.0};
    CHECK_THAT(expected_count(p, m, d), WithinRel(sigmoid(0.5) + 0.5, 1e-14));
    CHECK_THAT(expected_count(p, m, d), WithinAbs(1.12246, 5e-6));

    std::vector<MarketQuote> qs;
    for (int j = 0; j < 10; ++j) qs.push_back(quote(j + 1, 500));
    const Portfolio ten(qs);
    CHECK(expected_count(ten, PortfolioModel::linear(std::vector<LinearParams>(10, {0.5, 0.0})),
                         std::vector<double>(10, 0.0)) == 5.0);
}

TEST_CASE("size mismatches are rejected", "[objectives]") {
    const Portfolio p({quote(1, 100), quote(2, 100)});
    const auto m = PortfolioModel::linear({{0.5, 0.0}, {0.5, 0.0}});
    CHECK_THROWS_AS(expected_volume(p, m, std::vector<double>{0.0}), DomainError);
    CHECK_THROWS_AS(expected_volume(p, PortfolioModel::linear({{0.5, 0.0}}), std::vector<double>{0.0, 0.0}),
                    ValidationError);
}

// ============================================================================
// Constraints and penalty
// ============================================================================

TEST_CASE("residual signs", "[objectives]") {
    const Portfolio p({quote(1, 100)});
    const auto m = PortfolioModel::linear({{0.6, 0.0}});
    const std::vector<double> zero{0.0};
    const auto r = constraint_residuals(ProblemSpec::volume({0.1, 0.5}), p, m, zero);
    CHECK_THAT(r.h1, WithinAbs(0.1, 1e-15));
    CHECK_THAT(r.h2, WithinAbs(-0.5, 1e-15));
    CHECK_FALSE(r.feasible());

    // Boundary feasibility at l1 exactly.
    CHECK(constraint_residuals(ProblemSpec::volume({0.1, 0.6}), p, m, zero).h1 == 0.0);
    CHECK(constraint_residuals(ProblemSpec::volume({0.1, 0.6}), p, m, zero).feasible());

    // Count problem: E[V] = 60 sits on the floor.
    const auto rc = constraint_residuals(ProblemSpec::count({60.0, 70.0}), p, m, zero);
    CHECK(rc.h2 == 0.0);
    CHECK(rc.h1 == -10.0);
}

TEST_CASE("feasible means l2 <= EPN <= l1", "[objectives][property]") {
    Rng rng(9);
    for (int t = 0; t < 1000; ++t) {
        const double pi = rng.uniform(0.01, 0.99);
        const Portfolio p({quote(1, 100)});
        const auto m = PortfolioModel::linear({{pi, 0.0}});
        const double lo = rng.uniform(0.01, 0.5), hi = rng.uniform(0.5, 0.99);
        const auto r = constraint_residuals(ProblemSpec::volume({lo, hi}), p, m, std::vector<double>{0.0});
        CHECK(r.feasible() == (lo <= pi && pi <= hi));
    }
}

TEST_CASE("exterior quadratic penalty", "[objectives]") {
    const Portfolio p({quote(1, 100)});
    const auto m = PortfolioModel::linear({{0.6, 0.0}});
    const std::vector<double> zero{0.0};
    const auto spec = ProblemSpec::volume({0.1, 0.5});
    const double v = penalized_objective(spec, {1000.0, 10.0}, p, m, zero);
    CHECK_THAT(v, WithinAbs(-60.0 + 10.0, 1e-9));
    const double v2 = penalized_objective(spec, {2000.0, 10.0}, p, m, zero);
    CHECK_THAT(v2 + 60.0, WithinRel(2.0 * (v + 60.0), 1e-12));

    const auto feasible = ProblemSpec::volume({0.1, 0.9});
    CHECK(penalized_objective(feasible, {1000.0, 10.0}, p, m, zero) == -60.0);
    CHECK(exterior_penalty(-3.0) == 0.0);
    CHECK(exterior_penalty(0.5) == 0.25);
}

TEST_CASE("spec validation", "[objectives]") {
    CHECK_THROWS_AS(ProblemSpec::volume({0.5, 0.45}), ValidationError);
    CHECK_THROWS_AS(ProblemSpec::volume({0.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(ProblemSpec::count({10.0, 5.0}), ValidationError);
    ProblemSpec bad{Objective::Volume, std::nullopt, VolumeBounds{1, 2}, {}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

// ============================================================================
// Gradient
// ============================================================================

TEST_CASE("objective gradient values", "[objectives]") {
    const Portfolio p({quote(1, 100)});
    const auto lm = PortfolioModel::logistic({{0.5, -4.0}});
    const std::vector<double> zero{0.0};
    const auto g = objective_grad(ProblemSpec::volume({0.1, 0.9}), p, lm, zero);
    REQUIRE(g.size() == 1);
    CHECK_THAT(g[0], WithinAbs(-50.0, 1e-12));

    const Portfolio two({quote(1, 100), quote(2, 300)});
    const auto lin = PortfolioModel::linear({{0.5, -1.0}, {0.5, -1.0}});
    const auto gc = objective_grad(ProblemSpec::count({1.0, 2.0}), two, lin, std::vector<double>{0.0, 0.1});
    REQUIRE(gc.size() == 2);
    CHECK(gc[0] == -1.0);
    CHECK(gc[1] == -1.0);

    CHECK_THROWS_AS(objective_grad(ProblemSpec::volume({0.1, 0.9}), p, PortfolioModel::step(p, {}), zero),
                    UnsupportedModelError);
}

TEST_CASE("objective gradient is separable", "[objectives][property]") {
    Rng rng(31);
    auto inst = random_instance(rng, true, 20);
    const auto spec = ProblemSpec::volume({0.1, 0.9});
    std::vector<double> d(20);
    for (auto& x : d) x = rng.uniform(-0.2, 0.2);
    const auto g = objective_grad(spec, inst.portfolio, inst.model, d);
    for (std::size_t k = 0; k < d.size(); ++k) {
        auto e = d;
        e[k] = std::clamp(e[k] + 0.01, -0.2, 0.2);
        const auto g2 = objective_grad(spec, inst.portfolio, inst.model, e);
        for (std::size_t j = 0; j < d.size(); ++j)
            if (j != k) CHECK(g2[j] == g[j]);
    }
}

TEST_CASE("objective gradient matches central differences", "[objectives][property]") {
    Rng rng(37);
    const double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
        const bool logistic = t % 2 == 0;
        auto inst = random_instance(rng, logistic, 5);
        const auto spec = t % 4 < 2 ? ProblemSpec::volume({0.1, 0.9}) : ProblemSpec::count({1.0, 1e9});
        std::vector<double> d(5);
        for (auto& x : d) x = rng.uniform(-0.2 + h, 0.2 - h);
        const auto g = objective_grad(spec, inst.portfolio, inst.model, d);
        for (std::size_t j = 0; j < d.size(); ++j) {
            auto up = d, dn = d;
            up[j] += h;
            dn[j] -= h;
            const auto f = [&](const std::vector<double>& x) {
                const auto e = evaluate(inst.portfolio, inst.model, x);
                return objective_value(spec, e);
            };
            const double fd = (f(up) - f(dn)) / (2 * h);
            CHECK(std::abs(g[j] - fd) / std::max(1.0, std::abs(g[j])) < 1e-6);
        }
    }
}

TEST_CASE("default penalty scales with the baseline objective", "[objectives]") {
    const Portfolio p({quote(1, 100), quote(2, 300)});
    const auto m = PortfolioModel::linear({{0.5, -1.0}, {0.5, -1.0}});
    const auto pv = default_penalty(ProblemSpec::volume({0.1, 0.9}), p, m);
    CHECK_THAT(pv.r, WithinRel(1e3 * 200.0, 1e-12));
    const auto pc = default_penalty(ProblemSpec::count({1.0, 2.0}), p, m);
    CHECK_THAT(pc.r, WithinRel(1e3 * 1.0 / (400.0 * 400.0), 1e-12));
}
