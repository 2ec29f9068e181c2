#pragma once

// Market data model: one quote per prospective customer, carrying the
// company's base premium, every competitor's premium for the same cover and
// the admissible band for the relative premium change delta.

#include <pricopt/detail/text.hpp>
#include <pricopt/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace pricopt {

struct DeltaBounds {
    double lower = -0.2;
    double upper = 0.2;
};

class MarketQuote {
public:
    MarketQuote(std::int64_t customer_id, double base_premium, std::vector<double> competitor_premiums,
                double delta_lower, double delta_upper)
        : id_(customer_id), base_(base_premium), competitors_(std::move(competitor_premiums)),
          lower_(delta_lower), upper_(delta_upper) {
        validate();
        sorted_ = competitors_;
        std::sort(sorted_.begin(), sorted_.end());
        sorted_.erase(std::unique(sorted_.begin(), sorted_.end()), sorted_.end());
    }

    std::int64_t customer_id() const { return id_; }
    double base_premium() const { return base_; }
    const std::vector<double>& competitor_premiums() const { return competitors_; }
    std::size_t competitor_count() const { return competitors_.size(); }
    double delta_lower() const { return lower_; }
    double delta_upper() const { return upper_; }

    // Distinct competitor premiums in increasing order.
    const std::vector<double>& sorted_competitors() const { return sorted_; }
    double min_competitor() const { return sorted_.front(); }
    double max_competitor() const { return sorted_.back(); }

    double premium_at(double delta) const { return base_ * (1.0 + delta); }

    bool in_bounds(double delta) const { return delta >= lower_ && delta <= upper_; }

    friend bool operator==(const MarketQuote& a, const MarketQuote& b) {
        return a.id_ == b.id_ && a.base_ == b.base_ && a.competitors_ == b.competitors_ &&
               a.lower_ == b.lower_ && a.upper_ == b.upper_;
    }

private:
    void validate() const {
        const auto where = " (customer_id " + std::to_string(id_) + ")";
        if (!(base_ > 0.0)) throw ValidationError("base_premium must be > 0" + where);
        if (competitors_.empty()) throw ValidationError("competitor_premiums must be non-empty" + where);
        for (double p : competitors_)
            if (!(p > 0.0)) throw ValidationError("competitor_premiums must be > 0" + where);
        if (!(lower_ > -1.0 && lower_ < 1.0)) throw ValidationError("delta_lower must lie in (-1, 1)" + where);
        if (!(upper_ > -1.0 && upper_ < 1.0)) throw ValidationError("delta_upper must lie in (-1, 1)" + where);
        if (!(lower_ < upper_)) throw ValidationError("delta_lower must be < delta_upper" + where);
        const auto [lo, hi] = std::minmax_element(competitors_.begin(), competitors_.end());
        if (*lo == *hi)
            throw ValidationError("competitor_premiums need at least two distinct values" + where);
    }

    std::int64_t id_;
    double base_;
    std::vector<double> competitors_;
    double lower_;
    double upper_;
    std::vector<double> sorted_;
};

class Portfolio {
public:
    explicit Portfolio(std::vector<MarketQuote> quotes) : quotes_(std::move(quotes)) {
        if (quotes_.empty()) throw ValidationError("portfolio must contain at least one quote");
        const auto k = quotes_.front().competitor_count();
        std::unordered_set<std::int64_t> ids;
        for (const auto& q : quotes_) {
            if (!ids.insert(q.customer_id()).second)
                throw ValidationError("duplicate customer_id " + std::to_string(q.customer_id()));
            if (q.competitor_count() != k)
                throw ValidationError("competitor count differs from " + std::to_string(k) + " (customer_id " +
                                      std::to_string(q.customer_id()) + ")");
        }
    }

    std::size_t size() const { return quotes_.size(); }
    std::size_t competitor_count() const { return quotes_.front().competitor_count(); }
    const MarketQuote& operator[](std::size_t j) const { return quotes_[j]; }
    const std::vector<MarketQuote>& quotes() const { return quotes_; }
    auto begin() const { return quotes_.begin(); }
    auto end() const { return quotes_.end(); }

    double total_base_premium() const {
        double s = 0.0;
        for (const auto& q : quotes_) s += q.base_premium();
        return s;
    }

    friend bool operator==(const Portfolio&, const Portfolio&) = default;

private:
    std::vector<MarketQuote> quotes_;
};

enum class DomainKind { Continuous, Discrete };

// Admissible values of delta. Continuous domains use each quote's own
// bounds; discrete domains restrict every customer to the same grid.
struct DeltaDomain {
    DomainKind kind = DomainKind::Continuous;
    std::vector<double> values;

    static DeltaDomain continuous() { return {}; }

    static DeltaDomain discrete(std::vector<double> grid) {
        DeltaDomain d{DomainKind::Discrete, std::move(grid)};
        if (d.values.empty()) throw ValidationError("discrete delta grid must be non-empty");
        for (std::size_t i = 1; i < d.values.size(); ++i)
            if (!(d.values[i - 1] < d.values[i]))
                throw ValidationError("discrete delta grid must be strictly increasing");
        return d;
    }

    // Uniform grid lo, lo+step, ..., up to hi (inclusive within half a step).
    static DeltaDomain uniform_grid(double lo, double hi, double step) {
        std::vector<double> grid;
        const auto count = static_cast<long>(std::floor((hi - lo) / step + 0.5));
        for (long i = 0; i <= count; ++i) grid.push_back(lo + step * static_cast<double>(i));
        return discrete(std::move(grid));
    }

    bool is_discrete() const { return kind == DomainKind::Discrete; }

    // Every grid value must fit every quote's closed delta band.
    void check_against(const Portfolio& portfolio) const {
        if (!is_discrete()) return;
        for (const auto& q : portfolio)
            for (double v : values)
                if (v < q.delta_lower() || v > q.delta_upper())
                    throw ValidationError("discrete delta " + detail::format_double(v) +
                                          " outside bounds of customer_id " + std::to_string(q.customer_id()));
    }
};

// 1 + number of competitors strictly cheaper than the candidate premium.
// Ties go to the company.
inline int market_rank(const MarketQuote& quote, double candidate_premium) {
    if (!(candidate_premium > 0.0)) throw DomainError("candidate premium must be > 0");
    int rank = 1;
    for (double p : quote.competitor_premiums())
        if (p < candidate_premium) ++rank;
    return rank;
}

// ---------------------------------------------------------------------------
// Portfolio CSV: customer_id,P0,P1,...,Pk,delta_lower,delta_upper
//
// Empty delta_lower/delta_upper cells fall back to `default_bounds`.

inline Portfolio parse_portfolio(std::istream& in, std::optional<DeltaBounds> default_bounds = std::nullopt) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("portfolio CSV: missing header");
    const auto header = detail::split_csv(line);
    if (header.size() < 5 || header.front() != "customer_id" || header[1] != "P0" ||
        header[header.size() - 2] != "delta_lower" || header.back() != "delta_upper")
        throw ParseError("portfolio CSV: header must be customer_id,P0,P1,...,Pk,delta_lower,delta_upper");
    const std::size_t k = header.size() - 4;
    for (std::size_t i = 1; i <= k; ++i)
        if (header[1 + i] != "P" + std::to_string(i))
            throw ParseError("portfolio CSV: expected column P" + std::to_string(i));

    std::vector<MarketQuote> quotes;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        const auto fail = [&](const std::string& what) {
            return ParseError("portfolio CSV row " + std::to_string(row) + ": " + what);
        };
        if (cells.size() != header.size())
            throw fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
        std::int64_t id = 0;
        if (!detail::parse_int(cells[0], id)) throw fail("bad customer_id '" + std::string(cells[0]) + "'");
        double base = 0.0;
        if (!detail::parse_double(cells[1], base)) throw fail("bad P0 '" + std::string(cells[1]) + "'");
        std::vector<double> comps(k);
        for (std::size_t i = 0; i < k; ++i)
            if (!detail::parse_double(cells[2 + i], comps[i]))
                throw fail("bad P" + std::to_string(i + 1) + " '" + std::string(cells[2 + i]) + "'");
        const auto bound = [&](std::string_view cell, const char* name, double fallback_ok, bool has_fallback) {
            double v = 0.0;
            if (cell.empty()) {
                if (!has_fallback) throw fail(std::string("missing ") + name);
                return fallback_ok;
            }
            if (!detail::parse_double(cell, v)) throw fail(std::string("bad ") + name + " '" + std::string(cell) + "'");
            return v;
        };
        const bool has_default = default_bounds.has_value();
        const double lo = bound(cells[2 + k], "delta_lower", has_default ? default_bounds->lower : 0.0, has_default);
        const double hi = bound(cells[3 + k], "delta_upper", has_default ? default_bounds->upper : 0.0, has_default);
        quotes.emplace_back(id, base, std::move(comps), lo, hi);
    }
    return Portfolio(std::move(quotes));
}

inline Portfolio load_portfolio(const std::string& path, std::optional<DeltaBounds> default_bounds = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open portfolio file '" + path + "'");
    return parse_portfolio(in, default_bounds);
}

inline void write_portfolio(std::ostream& out, const Portfolio& portfolio) {
    const auto k = portfolio.competitor_count();
    out << "customer_id,P0";
    for (std::size_t i = 1; i <= k; ++i) out << ",P" << i;
    out << ",delta_lower,delta_upper\n";
    for (const auto& q : portfolio) {
        out << q.customer_id() << ',' << detail::format_double(q.base_premium());
        for (double p : q.competitor_premiums()) out << ',' << detail::format_double(p);
        out << ',' << detail::format_double(q.delta_lower()) << ',' << detail::format_double(q.delta_upper()) << '\n';
    }
}

inline std::string serialize_portfolio(const Portfolio& portfolio) {
    std::ostringstream out;
    write_portfolio(out, portfolio);
    return out.str();
}

} // namespace pricopt
