#pragma once

// Summary metrics normalized by the no-change baseline, plus the tables
// behind the position and delta-distribution plots.

#include <pricopt/detail/text.hpp>
#include <pricopt/market.hpp>
#include <pricopt/objectives.hpp>
#include <pricopt/result.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pricopt {

inline constexpr double kZeroDelta = 1e-12;

struct ScenarioReport {
    std::size_t n = 0;
    double baseline_volume = 0.0;
    double baseline_count = 0.0;
    double volume = 0.0;
    double count = 0.0;
    double volume_ratio = 0.0; // percent of baseline
    double count_ratio = 0.0;
    double mean_delta = 0.0;   // percent
    double mean_increase = 0.0;
    double mean_decrease = 0.0;
    std::size_t n_increases = 0;
    std::size_t n_decreases = 0;
    std::size_t n_zero = 0;
    Residuals residuals;
    bool feasible = false;
    std::string solver;
    SolverStatus status = SolverStatus::Failed;
    std::string error;
};

inline ScenarioReport make_report(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                                  std::span<const double> delta) {
    ScenarioReport r;
    r.n = portfolio.size();
    const auto base = evaluate(portfolio, model, baseline_delta(portfolio));
    r.baseline_volume = base.volume;
    r.baseline_count = base.count;
    if (delta.empty()) return r;
    const auto e = evaluate(portfolio, model, delta);
    r.volume = e.volume;
    r.count = e.count;
    r.volume_ratio = 100.0 * e.volume / base.volume;
    r.count_ratio = 100.0 * e.count / base.count;
    double sum = 0.0, up = 0.0, down = 0.0;
    for (double d : delta) {
        sum += d;
        if (d > kZeroDelta) {
            ++r.n_increases;
            up += d;
        } else if (d < -kZeroDelta) {
            ++r.n_decreases;
            down += d;
        } else {
            ++r.n_zero;
        }
    }
    r.mean_delta = 100.0 * sum / static_cast<double>(delta.size());
    r.mean_increase = r.n_increases ? 100.0 * up / static_cast<double>(r.n_increases) : 0.0;
    r.mean_decrease = r.n_decreases ? 100.0 * down / static_cast<double>(r.n_decreases) : 0.0;
    r.residuals = residuals_from(spec, e, portfolio.size());
    return r;
}

inline ScenarioReport make_report(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                                  const SolverResult& result) {
    auto r = make_report(spec, portfolio, model, result.delta);
    r.feasible = result.feasible;
    r.solver = result.solver;
    r.status = result.status;
    return r;
}

enum class Position { Cheapest, InBetween, MostExpensive };

inline const char* to_string(Position p) {
    switch (p) {
    case Position::Cheapest: return "cheapest";
    case Position::InBetween: return "in_between";
    case Position::MostExpensive: return "most_expensive";
    }
    return "unknown";
}

// Ties with a competitor count in the company's favour, as in market_rank.
inline Position market_position(const MarketQuote& quote, double premium) {
    if (premium <= quote.min_competitor()) return Position::Cheapest;
    if (premium >= quote.max_competitor()) return Position::MostExpensive;
    return Position::InBetween;
}

struct PositionRow {
    Position position;
    double before = 0.0; // percent of customers at delta = 0
    double after = 0.0;  // percent at the given delta
};

inline std::vector<PositionRow> premium_position_histogram(const Portfolio& portfolio, std::span<const double> delta) {
    if (delta.size() != portfolio.size()) throw DomainError("delta vector length differs from portfolio size");
    std::vector<PositionRow> rows{{Position::Cheapest}, {Position::InBetween}, {Position::MostExpensive}};
    const double unit = 100.0 / static_cast<double>(portfolio.size());
    for (std::size_t j = 0; j < portfolio.size(); ++j) {
        const auto& q = portfolio[j];
        rows[static_cast<int>(market_position(q, q.base_premium()))].before += unit;
        rows[static_cast<int>(market_position(q, q.premium_at(delta[j])))].after += unit;
    }
    return rows;
}

struct DeltaBin {
    double lower = 0.0;
    double upper = 0.0; // equal to lower for grid values
    std::size_t count = 0;
    double share = 0.0; // percent
};

// Discrete domains: one bin per grid value, in grid order. Continuous: bins
// of `width` covering [lo, hi]; the last bin is closed.
inline std::vector<DeltaBin> delta_distribution(std::span<const double> delta, const DeltaDomain& domain,
                                                double lo = -0.2, double hi = 0.2, double width = 0.05) {
    std::vector<DeltaBin> bins;
    if (domain.is_discrete()) {
        for (double v : domain.values) bins.push_back({v, v});
        for (double d : delta) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < bins.size(); ++i)
                if (std::abs(bins[i].lower - d) < std::abs(bins[best].lower - d)) best = i;
            ++bins[best].count;
        }
    } else {
        if (!(width > 0.0 && lo < hi)) throw ValidationError("delta bins need lo < hi and width > 0");
        const auto k = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
        for (std::size_t i = 0; i < k; ++i)
            bins.push_back({lo + width * static_cast<double>(i), std::min(hi, lo + width * static_cast<double>(i + 1))});
        for (double d : delta) {
            auto i = static_cast<long>(std::floor((d - lo) / width));
            i = std::clamp<long>(i, 0, static_cast<long>(k) - 1);
            ++bins[static_cast<std::size_t>(i)].count;
        }
    }
    for (auto& b : bins) b.share = delta.empty() ? 0.0 : 100.0 * static_cast<double>(b.count) / static_cast<double>(delta.size());
    return bins;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_positions(std::ostream& out, const std::vector<PositionRow>& rows) {
    out << "position,before_pct,after_pct\n";
    for (const auto& r : rows)
        out << to_string(r.position) << ',' << detail::format_fixed(r.before, 4) << ','
            << detail::format_fixed(r.after, 4) << '\n';
}

inline void write_delta_distribution(std::ostream& out, const std::vector<DeltaBin>& bins) {
    out << "lower,upper,count,share_pct\n";
    for (const auto& b : bins)
        out << detail::format_double(b.lower) << ',' << detail::format_double(b.upper) << ',' << b.count << ','
            << detail::format_fixed(b.share, 4) << '\n';
}

inline void write_solution(std::ostream& out, const Portfolio& portfolio, const PortfolioModel& model,
                           std::span<const double> delta) {
    out << "customer_id,base_premium,delta,premium,prob_before,prob_after,rank_before,rank_after\n";
    for (std::size_t j = 0; j < portfolio.size(); ++j) {
        const auto& q = portfolio[j];
        const double p0 = std::clamp(0.0, q.delta_lower(), q.delta_upper());
        out << q.customer_id() << ',' << detail::format_double(q.base_premium()) << ','
            << detail::format_double(delta[j]) << ',' << detail::format_double(q.premium_at(delta[j])) << ','
            << detail::format_double(acceptance_prob(model[j], q, p0)) << ','
            << detail::format_double(acceptance_prob(model[j], q, delta[j])) << ','
            << market_rank(q, q.premium_at(p0)) << ',' << market_rank(q, q.premium_at(delta[j])) << '\n';
    }
}

inline void write_ga_trace(std::ostream& out, const std::vector<GaTraceRow>& trace) {
    out << "generation,best,mean,feasible_count,penalty\n";
    for (const auto& t : trace)
        out << t.generation << ',' << detail::format_double(t.best) << ',' << detail::format_double(t.mean) << ','
            << t.feasible_count << ',' << detail::format_double(t.penalty) << '\n';
}

inline void write_sqp_trace(std::ostream& out, const std::vector<SqpTraceRow>& trace) {
    out << "iter,phi,kkt_residual,alpha\n";
    for (const auto& t : trace)
        out << t.iter << ',' << detail::format_double(t.phi) << ',' << detail::format_double(t.kkt_residual) << ','
            << detail::format_double(t.alpha) << '\n';
}

} // namespace pricopt
