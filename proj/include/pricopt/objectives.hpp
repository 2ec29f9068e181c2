#pragma once

#include <pricopt/conversion.hpp>
#include <pricopt/error.hpp>
#include <pricopt/market.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace pricopt {

enum class Objective { Volume, Count };

// Expected-new-customer fraction band, lower (l2) and upper (l1).
struct CountBounds {
    double lower = 0.45;
    double upper = 0.50;
};

// Expected premium volume band, lower (C2) and upper (C1), in currency.
struct VolumeBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct ProblemSpec {
    Objective objective = Objective::Volume;
    std::optional<CountBounds> count_bounds;
    std::optional<VolumeBounds> volume_bounds;
    DeltaDomain domain;

    static ProblemSpec volume(CountBounds b, DeltaDomain d = DeltaDomain::continuous()) {
        ProblemSpec s{Objective::Volume, b, std::nullopt, std::move(d)};
        s.validate();
        return s;
    }

    static ProblemSpec count(VolumeBounds b, DeltaDomain d = DeltaDomain::continuous()) {
        ProblemSpec s{Objective::Count, std::nullopt, b, std::move(d)};
        s.validate();
        return s;
    }

    void validate() const {
        if (objective == Objective::Volume) {
            if (!count_bounds || volume_bounds)
                throw ValidationError("volume objective takes count bounds (and only count bounds)");
            if (!(0.0 < count_bounds->lower && count_bounds->lower < count_bounds->upper && count_bounds->upper < 1.0))
                throw ValidationError("count bounds require 0 < lower < upper < 1");
        } else {
            if (!volume_bounds || count_bounds)
                throw ValidationError("count objective takes volume bounds (and only volume bounds)");
            if (!(volume_bounds->lower < volume_bounds->upper))
                throw ValidationError("volume bounds require lower < upper");
        }
    }
};

struct PenaltyConfig {
    double r = 1e3;
    double growth = 10.0;

    void validate() const {
        if (!(r > 0.0)) throw ValidationError("penalty coefficient must be > 0");
        if (!(growth >= 1.0)) throw ValidationError("penalty growth must be >= 1");
    }
};

// Constraint values; the point is feasible when both are <= 0.
struct Residuals {
    double h1 = 0.0;
    double h2 = 0.0;

    double violation() const { return std::max(0.0, h1) + std::max(0.0, h2); }
    bool feasible(double tol = 0.0) const { return h1 <= tol && h2 <= tol; }
};

// Per-customer rates (and slopes when requested) at one delta vector.
struct PointEval {
    std::vector<double> prob;
    std::vector<double> dprob;
    double volume = 0.0;
    double count = 0.0;
};

namespace detail {

inline void check_sizes(const Portfolio& portfolio, const PortfolioModel& model, std::span<const double> delta) {
    model.check_matches(portfolio);
    if (delta.size() != portfolio.size())
        throw DomainError("delta vector has length " + std::to_string(delta.size()) + ", portfolio has " +
                          std::to_string(portfolio.size()));
}

} // namespace detail

// delta = 0, clamped into each quote's band.
inline std::vector<double> baseline_delta(const Portfolio& portfolio) {
    std::vector<double> d(portfolio.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = std::clamp(0.0, portfolio[j].delta_lower(), portfolio[j].delta_upper());
    return d;
}

inline PointEval evaluate(const Portfolio& portfolio, const PortfolioModel& model, std::span<const double> delta,
                          bool with_grad = false) {
    detail::check_sizes(portfolio, model, delta);
    PointEval e;
    const auto n = portfolio.size();
    e.prob.resize(n);
    if (with_grad) e.dprob.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& q = portfolio[j];
        e.prob[j] = acceptance_prob(model[j], q, delta[j]);
        if (with_grad) e.dprob[j] = acceptance_prob_grad(model[j], q, delta[j]);
        e.volume += q.premium_at(delta[j]) * e.prob[j];
        e.count += e.prob[j];
    }
    return e;
}

inline double expected_volume(const Portfolio& portfolio, const PortfolioModel& model, std::span<const double> delta) {
    return evaluate(portfolio, model, delta).volume;
}

inline double expected_count(const Portfolio& portfolio, const PortfolioModel& model, std::span<const double> delta) {
    return evaluate(portfolio, model, delta).count;
}

inline double objective_value(const ProblemSpec& spec, const PointEval& e) {
    return spec.objective == Objective::Volume ? e.volume : e.count;
}

inline Residuals residuals_from(const ProblemSpec& spec, const PointEval& e, std::size_t n) {
    if (spec.objective == Objective::Volume) {
        const double epn = e.count / static_cast<double>(n);
        return {epn - spec.count_bounds->upper, spec.count_bounds->lower - epn};
    }
    return {e.volume - spec.volume_bounds->upper, spec.volume_bounds->lower - e.volume};
}

inline Residuals constraint_residuals(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                                      std::span<const double> delta) {
    return residuals_from(spec, evaluate(portfolio, model, delta), portfolio.size());
}

inline double exterior_penalty(double h) {
    const double v = std::max(0.0, h);
    return v * v;
}

// -objective + r (max(0,h1)^2 + max(0,h2)^2); minimized by the GA.
inline double penalized_value(const ProblemSpec& spec, const PenaltyConfig& penalty, const PointEval& e, std::size_t n) {
    const auto res = residuals_from(spec, e, n);
    return -objective_value(spec, e) + penalty.r * (exterior_penalty(res.h1) + exterior_penalty(res.h2));
}

inline double penalized_objective(const ProblemSpec& spec, const PenaltyConfig& penalty, const Portfolio& portfolio,
                                  const PortfolioModel& model, std::span<const double> delta) {
    return penalized_value(spec, penalty, evaluate(portfolio, model, delta), portfolio.size());
}

// Gradient of the (maximized) objective. Separable: coordinate j only
// depends on delta_j.
inline std::vector<double> objective_grad(const ProblemSpec& spec, const Portfolio& portfolio,
                                          const PortfolioModel& model, std::span<const double> delta) {
    if (!model.differentiable())
        throw UnsupportedModelError("objective gradient needs a linear or logistic conversion model");
    const auto e = evaluate(portfolio, model, delta, true);
    std::vector<double> g(portfolio.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const auto& q = portfolio[j];
        g[j] = spec.objective == Objective::Volume
                   ? q.base_premium() * e.prob[j] + q.premium_at(delta[j]) * e.dprob[j]
                   : e.dprob[j];
    }
    return g;
}

// Units used by the solvers: the objective is divided by `objective` and
// the constraint residuals by `constraint`, so both are per-customer
// averages of order one.
struct ProblemScale {
    double objective = 1.0;
    double constraint = 1.0;
};

inline ProblemScale natural_scale(const ProblemSpec& spec, const Portfolio& portfolio) {
    const double n = static_cast<double>(portfolio.size());
    const double premium = portfolio.total_base_premium();
    if (spec.objective == Objective::Volume) return {premium, 1.0};
    return {n, premium};
}

// Starting penalty coefficient: 1e3 times the objective at delta = 0,
// divided by the squared constraint scale so that a violation of 1% of the
// constraint scale costs 10% of the baseline objective.
inline PenaltyConfig default_penalty(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model) {
    const auto e = evaluate(portfolio, model, baseline_delta(portfolio));
    const double base = std::max(std::abs(objective_value(spec, e)), 1e-12);
    const double cs = natural_scale(spec, portfolio).constraint;
    return {1e3 * base / (cs * cs), 10.0};
}

} // namespace pricopt
