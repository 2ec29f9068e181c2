#pragma once

// Exhaustive search over a discrete delta grid. Only for small instances.

#include <pricopt/objectives.hpp>
#include <pricopt/result.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pricopt {

struct OracleConfig {
    std::uint64_t max_combinations = 10'000'000;
};

// Number of grid combinations, saturating at UINT64_MAX.
inline std::uint64_t combination_count(std::size_t grid_size, std::size_t n) {
    std::uint64_t total = 1;
    for (std::size_t j = 0; j < n; ++j) {
        if (total > std::numeric_limits<std::uint64_t>::max() / grid_size) return std::numeric_limits<std::uint64_t>::max();
        total *= grid_size;
    }
    return total;
}

// Best feasible combination; ties keep the lexicographically smallest delta
// (grid values are increasing, so odometer order is lexicographic order).
// With no feasible combination, returns the least-violation one, flagged
// infeasible.
inline SolverResult exhaustive_search(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                                      const OracleConfig& config = {}) {
    spec.validate();
    model.check_matches(portfolio);
    if (!spec.domain.is_discrete()) throw ValidationError("oracle needs a discrete delta grid");
    spec.domain.check_against(portfolio);
    const auto& grid = spec.domain.values;
    const auto n = portfolio.size();
    const auto total = combination_count(grid.size(), n);
    if (total > config.max_combinations)
        throw CapExceededError("oracle needs " + std::to_string(grid.size()) + "^" + std::to_string(n) +
                               " combinations, cap is " + std::to_string(config.max_combinations) +
                               "; raise max_combinations to at least that");

    const auto scale = natural_scale(spec, portfolio);
    SolverResult result;
    result.solver = "oracle";

    // Per-customer rate table, then incremental sums over the odometer.
    std::vector<std::vector<double>> prob(n, std::vector<double>(grid.size()));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t g = 0; g < grid.size(); ++g) prob[j][g] = acceptance_prob(model[j], portfolio[j], grid[g]);

    std::vector<std::size_t> idx(n, 0);
    std::vector<std::size_t> best_idx;
    bool best_feasible = false;
    double best_obj = -std::numeric_limits<double>::infinity();
    double best_viol = std::numeric_limits<double>::infinity();
    std::vector<double> delta(n);
    for (std::uint64_t k = 0; k < total; ++k) {
        PointEval e;
        for (std::size_t j = 0; j < n; ++j) {
            const double pi = prob[j][idx[j]];
            e.volume += portfolio[j].premium_at(grid[idx[j]]) * pi;
            e.count += pi;
        }
        const auto res = residuals_from(spec, e, n);
        const bool feasible = is_feasible(res, scale);
        const double obj = objective_value(spec, e);
        if (feasible) {
            if (!best_feasible || obj > best_obj) {
                best_feasible = true;
                best_obj = obj;
                best_idx = idx;
            }
        } else if (!best_feasible && res.violation() < best_viol) {
            best_viol = res.violation();
            best_idx = idx;
        }
        // Odometer: last customer varies fastest.
        for (std::size_t j = n; j-- > 0;) {
            if (++idx[j] < grid.size()) break;
            idx[j] = 0;
        }
    }
    for (std::size_t j = 0; j < n; ++j) delta[j] = grid[best_idx[j]];
    result.delta = delta;
    const auto e = evaluate(portfolio, model, delta);
    result.objective = objective_value(spec, e);
    result.residuals = residuals_from(spec, e, n);
    result.feasible = is_feasible(result.residuals, scale);
    result.iterations = static_cast<int>(std::min<std::uint64_t>(total, std::numeric_limits<int>::max()));
    result.evaluations = total;
    result.status = SolverStatus::Completed;
    return result;
}

} // namespace pricopt
