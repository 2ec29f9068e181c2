#pragma once

// Synthetic market: base premiums, a random market position for the
// company, a median market premium anchored on that position, and
// competitor offers spread between P_min and P_max.

#include <pricopt/error.hpp>
#include <pricopt/market.hpp>
#include <pricopt/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace pricopt {

struct SimConfig {
    std::size_t n = 1000;
    double base_low = 400.0;
    double base_high = 2000.0;
    double split_point = 1600.0;
    double cheap_share = 0.75;
    double rank_low = 0.25;
    double rank_high = 0.75;
    double lwb = -0.10;
    double upb = 0.15;
    int n_other = 7;
    DeltaBounds bounds;
    std::uint64_t seed = 1;

    void validate() const {
        if (n < 1) throw ValidationError("n must be >= 1");
        if (!(0.0 < base_low && base_low < split_point && split_point < base_high))
            throw ValidationError("need 0 < base_low < split_point < base_high");
        if (!(cheap_share >= 0.0 && cheap_share <= 1.0)) throw ValidationError("cheap_share must lie in [0, 1]");
        if (!(0.0 < rank_low && rank_low < rank_high && rank_high < 1.0))
            throw ValidationError("need 0 < rank_low < rank_high < 1");
        if (!(lwb < 0.0 && 0.0 < upb)) throw ValidationError("need lwb < 0 < upb");
        if (lwb <= -1.0) throw ValidationError("lwb must be > -1");
        if (n_other < 0) throw ValidationError("n_other must be >= 0");
        if (!(bounds.lower < bounds.upper)) throw ValidationError("delta bounds need lower < upper");
    }
};

struct MedianPremium {
    double median;
    double low;  // P_min
    double high; // P_max
};

inline double gen_base_premium(const SimConfig& config, Rng& rng) {
    if (rng.bernoulli(config.cheap_share)) return rng.uniform(config.base_low, config.split_point);
    return rng.uniform(config.split_point, config.base_high);
}

// P_m = P_0 / (1 + (upb - lwb)(u - 0.5)).
inline MedianPremium median_premium(double p0, double u, double lwb, double upb) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("rank fraction u must lie in (0, 1)");
    const double pm = p0 / (1.0 + (upb - lwb) * (u - 0.5));
    return {pm, pm * (1.0 + lwb), pm * (1.0 + upb)};
}

inline MarketQuote gen_quote(const SimConfig& config, Rng& rng, std::int64_t customer_id) {
    const double p0 = gen_base_premium(config, rng);
    const double u = rng.uniform(config.rank_low, config.rank_high);
    const auto m = median_premium(p0, u, config.lwb, config.upb);
    std::vector<double> comps{m.low, m.high};
    for (int i = 0; i < config.n_other; ++i) {
        double p = rng.uniform(m.low, m.high);
        while (p == p0) p = rng.uniform(m.low, m.high);
        comps.push_back(p);
    }
    // Fisher-Yates with the portable index draw.
    for (std::size_t i = comps.size() - 1; i > 0; --i) std::swap(comps[i], comps[rng.index(i + 1)]);
    return MarketQuote(customer_id, p0, std::move(comps), config.bounds.lower, config.bounds.upper);
}

inline Portfolio simulate_portfolio(const SimConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::vector<MarketQuote> quotes;
    quotes.reserve(config.n);
    for (std::size_t j = 0; j < config.n; ++j) quotes.push_back(gen_quote(config, rng, static_cast<std::int64_t>(j + 1)));
    return Portfolio(std::move(quotes));
}

struct ColumnStats {
    std::string name;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

namespace detail {

// Linear interpolation between order statistics (type 7).
inline double quantile_sorted(const std::vector<double>& v, double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline ColumnStats column_stats(std::string name, std::vector<double> v) {
    ColumnStats s;
    s.name = std::move(name);
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    s.max = v.back();
    return s;
}

} // namespace detail

// Per-column summary: P0 followed by each competitor column.
inline std::vector<ColumnStats> premium_statistics(const Portfolio& portfolio) {
    std::vector<ColumnStats> out;
    std::vector<double> col;
    col.reserve(portfolio.size());
    for (const auto& q : portfolio) col.push_back(q.base_premium());
    out.push_back(detail::column_stats("P0", col));
    for (std::size_t i = 0; i < portfolio.competitor_count(); ++i) {
        col.clear();
        for (const auto& q : portfolio) col.push_back(q.competitor_premiums()[i]);
        out.push_back(detail::column_stats("P" + std::to_string(i + 1), col));
    }
    return out;
}

inline void write_statistics(std::ostream& out, const std::vector<ColumnStats>& stats) {
    out << "column,mean,min,q1,median,q3,max\n";
    for (const auto& s : stats)
        out << s.name << ',' << detail::format_fixed(s.mean, 2) << ',' << detail::format_fixed(s.min, 2) << ','
            << detail::format_fixed(s.q1, 2) << ',' << detail::format_fixed(s.median, 2) << ','
            << detail::format_fixed(s.q3, 2) << ',' << detail::format_fixed(s.max, 2) << '\n';
}

} // namespace pricopt
