#pragma once

// Acceptance-probability (conversion) models: the chance that a customer
// takes the company's offer at premium P(1 + delta).

#include <pricopt/error.hpp>
#include <pricopt/market.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace pricopt {

enum class StepMode { PiecewiseConstant, ClampedLinear };

// Market-position model. c1 applies at the cheapest competitor premium, c2 at
// the most expensive one; in between the rate falls linearly with premium
// (ClampedLinear) or stays flat between jump points (PiecewiseConstant).
struct StepParams {
    double c1 = 0.75;
    double c2 = 0.30;
    StepMode mode = StepMode::ClampedLinear;

    void validate() const {
        if (!(0.0 < c2 && c2 < c1 && c1 <= 1.0)) throw ValidationError("step model requires 0 < c2 < c1 <= 1");
    }
};

struct LinearParams {
    double alpha = 0.5;
    double beta = -1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("linear model requires alpha in (0, 1]");
        if (!(beta <= 0.0)) throw ValidationError("linear model requires beta <= 0");
    }
};

// pi(delta) = 1 / (1 + exp(-T delta) / c), with odds c = base / (1 - base).
struct LogisticParams {
    double base_rate = 0.5;
    double elasticity = -4.0;

    void validate() const {
        if (!(base_rate > 0.0 && base_rate < 1.0)) throw ValidationError("logistic model requires base_rate in (0, 1)");
        if (!(elasticity < 0.0)) throw ValidationError("logistic model requires elasticity < 0");
    }

    double odds() const { return base_rate / (1.0 - base_rate); }
};

// One customer's resolved model.
using ConversionModel = std::variant<StepParams, LinearParams, LogisticParams>;

inline bool is_differentiable(const ConversionModel& m) { return !std::holds_alternative<StepParams>(m); }

inline void validate(const ConversionModel& m) {
    std::visit([](const auto& p) { p.validate(); }, m);
}

// Midpoints between consecutive distinct competitor premiums.
inline std::vector<double> jump_points(const MarketQuote& quote) {
    const auto& s = quote.sorted_competitors();
    std::vector<double> out;
    out.reserve(s.size() - 1);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) out.push_back(0.5 * (s[i] + s[i + 1]));
    return out;
}

namespace detail {

inline double clamped_linear_rate(const StepParams& p, const MarketQuote& q, double premium) {
    const double lo = q.min_competitor();
    const double hi = q.max_competitor();
    const double v = p.c1 + (p.c2 - p.c1) * (premium - lo) / (hi - lo);
    return std::clamp(v, p.c2, p.c1);
}

inline double step_rate(const StepParams& p, const MarketQuote& q, double premium) {
    if (p.mode == StepMode::ClampedLinear) return clamped_linear_rate(p, q, premium);
    // Interval i is (J_{i-1}, J_i] and brackets the i-th distinct competitor
    // premium; J_{i} = (s_i + s_{i+1}) / 2.
    const auto& s = q.sorted_competitors();
    std::size_t i = 0;
    while (i + 1 < s.size() && premium > 0.5 * (s[i] + s[i + 1])) ++i;
    return clamped_linear_rate(p, q, s[i]);
}

inline double logistic_rate(const LogisticParams& p, double delta) {
    const double z = p.elasticity * delta + std::log(p.odds());
    return 1.0 / (1.0 + std::exp(-z));
}

} // namespace detail

// Rate at an arbitrary candidate premium (no delta bounds check). Used for
// competitor baselines and market-position reporting.
inline double acceptance_at_premium(const ConversionModel& model, const MarketQuote& quote, double premium) {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StepParams>) {
                return detail::step_rate(p, quote, premium);
            } else {
                const double delta = premium / quote.base_premium() - 1.0;
                if constexpr (std::is_same_v<T, LinearParams>)
                    return std::clamp(p.alpha + p.beta * delta, 0.0, 1.0);
                else
                    return detail::logistic_rate(p, delta);
            }
        },
        model);
}

inline double acceptance_prob(const ConversionModel& model, const MarketQuote& quote, double delta) {
    if (!quote.in_bounds(delta))
        throw DomainError("delta " + detail::format_double(delta) + " outside bounds of customer_id " +
                          std::to_string(quote.customer_id()));
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StepParams>)
                return detail::step_rate(p, quote, quote.premium_at(delta));
            else if constexpr (std::is_same_v<T, LinearParams>)
                return std::clamp(p.alpha + p.beta * delta, 0.0, 1.0);
            else
                return detail::logistic_rate(p, delta);
        },
        model);
}

// d pi / d delta. Linear: beta inside (0, 1), 0 where clamped.
inline double acceptance_prob_grad(const ConversionModel& model, const MarketQuote& quote, double delta) {
    if (!quote.in_bounds(delta))
        throw DomainError("delta " + detail::format_double(delta) + " outside bounds of customer_id " +
                          std::to_string(quote.customer_id()));
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StepParams>) {
                throw UnsupportedModelError("step conversion model has no derivative; use the GA or the oracle");
            } else if constexpr (std::is_same_v<T, LinearParams>) {
                const double v = p.alpha + p.beta * delta;
                return (v > 0.0 && v < 1.0) ? p.beta : 0.0;
            } else {
                const double pi = detail::logistic_rate(p, delta);
                return p.elasticity * pi * (1.0 - pi);
            }
        },
        model);
}

// Models resolved for every customer of a portfolio; all share one variant.
class PortfolioModel {
public:
    explicit PortfolioModel(std::vector<ConversionModel> per_customer) : models_(std::move(per_customer)) {
        if (models_.empty()) throw ValidationError("conversion model list is empty");
        const auto kind = models_.front().index();
        for (const auto& m : models_) {
            if (m.index() != kind) throw ValidationError("conversion models must share one variant per portfolio");
            pricopt::validate(m);
        }
    }

    static PortfolioModel step(const Portfolio& portfolio, const StepParams& params) {
        return PortfolioModel(std::vector<ConversionModel>(portfolio.size(), params));
    }

    static PortfolioModel linear(std::vector<LinearParams> params) {
        std::vector<ConversionModel> v(params.begin(), params.end());
        return PortfolioModel(std::move(v));
    }

    static PortfolioModel logistic(std::vector<LogisticParams> params) {
        std::vector<ConversionModel> v(params.begin(), params.end());
        return PortfolioModel(std::move(v));
    }

    // Logistic model whose base rate is the step model's rate at delta = 0,
    // so the competition signal enters through the odds.
    static PortfolioModel logistic_from_step(const Portfolio& portfolio, const StepParams& step,
                                             const std::vector<double>& elasticity) {
        if (elasticity.size() != portfolio.size()) throw ValidationError("elasticity list length differs from portfolio");
        std::vector<ConversionModel> v;
        v.reserve(portfolio.size());
        for (std::size_t j = 0; j < portfolio.size(); ++j) {
            const auto& q = portfolio[j];
            v.emplace_back(LogisticParams{detail::step_rate(step, q, q.base_premium()), elasticity[j]});
        }
        return PortfolioModel(std::move(v));
    }

    std::size_t size() const { return models_.size(); }
    const ConversionModel& operator[](std::size_t j) const { return models_[j]; }
    bool differentiable() const { return is_differentiable(models_.front()); }
    bool is_step() const { return std::holds_alternative<StepParams>(models_.front()); }

    void check_matches(const Portfolio& portfolio) const {
        if (models_.size() != portfolio.size())
            throw ValidationError("conversion model covers " + std::to_string(models_.size()) + " customers, portfolio has " +
                                  std::to_string(portfolio.size()));
    }

private:
    std::vector<ConversionModel> models_;
};

} // namespace pricopt
