#pragma once

// Penalty-method genetic algorithm: roulette-wheel reproduction, single-point
// crossover and bit-flip mutation over a fixed-point (continuous) or
// grid-index (discrete) encoding of the delta vector.

#include <pricopt/conversion.hpp>
#include <pricopt/market.hpp>
#include <pricopt/objectives.hpp>
#include <pricopt/random.hpp>
#include <pricopt/result.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace pricopt {

struct GaConfig {
    int population_size = 100;
    double crossover_prob = 0.8;
    double mutation_prob = 0.01;
    int max_generations = 500;
    int bits_per_gene = 12;
    std::uint64_t seed = 1;

    void validate() const {
        if (population_size < 2) throw ValidationError("GA population_size must be >= 2");
        if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) throw ValidationError("GA crossover_prob must be in [0, 1]");
        if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) throw ValidationError("GA mutation_prob must be in [0, 1]");
        if (max_generations < 1) throw ValidationError("GA max_generations must be >= 1");
        if (bits_per_gene < 4 || bits_per_gene > 30) throw ValidationError("GA bits_per_gene must be in [4, 30]");
    }
};

inline constexpr double kPenaltyCap = 1e12;
inline constexpr double kRouletteEpsilon = 1e-12;

// Shape of the string the operators act on. Continuous genes hold a
// `bits`-bit unsigned integer (most significant bit first in the string);
// discrete genes hold a grid index and are indivisible.
struct Encoding {
    DomainKind kind = DomainKind::Continuous;
    std::size_t genes = 0;
    int bits = 12;
    std::size_t alphabet = 0; // grid size, discrete only

    static Encoding for_problem(const ProblemSpec& spec, const Portfolio& portfolio, int bits_per_gene) {
        if (spec.domain.is_discrete())
            return {DomainKind::Discrete, portfolio.size(), bits_per_gene, spec.domain.values.size()};
        return {DomainKind::Continuous, portfolio.size(), bits_per_gene, 0};
    }

    // Positions a crossover can cut at; 0 and the full length are excluded.
    std::size_t string_length() const {
        return kind == DomainKind::Continuous ? genes * static_cast<std::size_t>(bits) : genes;
    }

    std::uint32_t max_value() const {
        return kind == DomainKind::Continuous ? (std::uint32_t{1} << bits) - 1 : static_cast<std::uint32_t>(alphabet - 1);
    }
};

struct Chromosome {
    std::vector<std::uint32_t> genes;
    friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

inline std::vector<double> decode(const Chromosome& c, const Portfolio& portfolio, const DeltaDomain& domain, int bits) {
    std::vector<double> delta(c.genes.size());
    const double top = std::ldexp(1.0, bits) - 1.0;
    for (std::size_t j = 0; j < delta.size(); ++j) {
        if (domain.is_discrete()) {
            delta[j] = domain.values[c.genes[j]];
        } else {
            const auto& q = portfolio[j];
            const double v = q.delta_lower() + (q.delta_upper() - q.delta_lower()) * c.genes[j] / top;
            delta[j] = std::clamp(v, q.delta_lower(), q.delta_upper());
        }
    }
    return delta;
}

inline Chromosome random_chromosome(const Encoding& enc, Rng& rng) {
    Chromosome c;
    c.genes.resize(enc.genes);
    for (auto& g : c.genes) g = static_cast<std::uint32_t>(rng.index(std::uint64_t{enc.max_value()} + 1));
    return c;
}

inline std::vector<Chromosome> initial_population(const Encoding& enc, int size, Rng& rng) {
    std::vector<Chromosome> pop;
    pop.reserve(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) pop.push_back(random_chromosome(enc, rng));
    return pop;
}

// Roulette weights from penalized values (lower is better):
// (worst - value) + epsilon, so every weight is positive.
inline std::vector<double> roulette_weights(const std::vector<double>& penalized) {
    const double worst = *std::max_element(penalized.begin(), penalized.end());
    std::vector<double> w(penalized.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (worst - penalized[i]) + kRouletteEpsilon;
    return w;
}

// Index drawn with probability weights[i] / sum(weights); uniform when the
// total is zero or not finite.
inline std::size_t roulette_spin(const std::vector<double>& cumulative, Rng& rng) {
    const double total = cumulative.back();
    if (!(total > 0.0) || !std::isfinite(total)) return static_cast<std::size_t>(rng.index(cumulative.size()));
    const double x = rng.uniform01() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

inline std::vector<Chromosome> select_parents(const std::vector<Chromosome>& population,
                                              const std::vector<double>& weights, Rng& rng) {
    if (weights.size() != population.size()) throw DomainError("one weight per population member required");
    for (double w : weights)
        if (!std::isfinite(w) || w < 0.0) throw DomainError("roulette weights must be finite and non-negative");
    std::vector<double> cumulative(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) cumulative[i] = acc += weights[i];
    std::vector<Chromosome> out;
    out.reserve(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) out.push_back(population[roulette_spin(cumulative, rng)]);
    return out;
}

// Swap the tails of two strings after position `cut` (0 < cut < length).
inline std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, std::size_t cut,
                                                      const Encoding& enc) {
    Chromosome x = a;
    Chromosome y = b;
    if (enc.kind == DomainKind::Discrete) {
        for (std::size_t g = cut; g < enc.genes; ++g) std::swap(x.genes[g], y.genes[g]);
        return {std::move(x), std::move(y)};
    }
    const auto bits = static_cast<std::size_t>(enc.bits);
    const std::size_t gene = cut / bits;
    const std::size_t offset = cut % bits;
    std::size_t first_full = gene;
    if (offset != 0) {
        // The first `offset` (most significant) bits stay; the rest swap.
        const std::uint32_t low_mask = (std::uint32_t{1} << (bits - offset)) - 1;
        const std::uint32_t ga = a.genes[gene];
        const std::uint32_t gb = b.genes[gene];
        x.genes[gene] = (ga & ~low_mask) | (gb & low_mask);
        y.genes[gene] = (gb & ~low_mask) | (ga & low_mask);
        first_full = gene + 1;
    }
    for (std::size_t g = first_full; g < enc.genes; ++g) std::swap(x.genes[g], y.genes[g]);
    return {std::move(x), std::move(y)};
}

inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double p_c,
                                                   const Encoding& enc, Rng& rng) {
    const std::size_t length = enc.string_length();
    if (length < 2 || !rng.bernoulli(p_c)) return {a, b};
    const std::size_t cut = 1 + static_cast<std::size_t>(rng.index(length - 1));
    return crossover_at(a, b, cut, enc);
}

// Continuous: each bit flips with probability p_m. Discrete: each gene is
// redrawn uniformly with probability p_m. Gaps between events are drawn
// geometrically, which gives the same distribution as one trial per position.
inline Chromosome mutate(Chromosome c, double p_m, const Encoding& enc, Rng& rng) {
    if (p_m <= 0.0) return c;
    const std::size_t length = enc.string_length();
    const auto apply = [&](std::size_t pos) {
        if (enc.kind == DomainKind::Discrete) {
            c.genes[pos] = static_cast<std::uint32_t>(rng.index(enc.alphabet));
        } else {
            const auto bits = static_cast<std::size_t>(enc.bits);
            c.genes[pos / bits] ^= std::uint32_t{1} << (bits - 1 - pos % bits);
        }
    };
    if (p_m >= 1.0) {
        for (std::size_t pos = 0; pos < length; ++pos) apply(pos);
        return c;
    }
    const double log_q = std::log1p(-p_m);
    std::size_t pos = 0;
    for (;;) {
        // P(skip = s) = (1 - p)^s p
        const double u = 1.0 - rng.uniform01(); // (0, 1]
        const double skip = std::floor(std::log(u) / log_q);
        if (skip >= static_cast<double>(length - pos)) break;
        pos += static_cast<std::size_t>(skip);
        apply(pos);
        if (++pos >= length) break;
    }
    return c;
}

namespace detail {

struct MemberScore {
    double objective = 0.0;
    Residuals residuals;
    bool feasible = false;

    double penalized(double r) const {
        return -objective + r * (exterior_penalty(residuals.h1) + exterior_penalty(residuals.h2));
    }
};

} // namespace detail

inline SolverResult run_ga(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                           const GaConfig& config, std::optional<PenaltyConfig> penalty_config = std::nullopt) {
    spec.validate();
    config.validate();
    model.check_matches(portfolio);
    spec.domain.check_against(portfolio);
    PenaltyConfig penalty = penalty_config.value_or(default_penalty(spec, portfolio, model));
    penalty.validate();
    penalty.r = std::min(penalty.r, kPenaltyCap);

    const auto enc = Encoding::for_problem(spec, portfolio, config.bits_per_gene);
    const auto scale = natural_scale(spec, portfolio);
    const std::size_t n = portfolio.size();
    Rng rng(config.seed);

    SolverResult result;
    result.solver = "ga";

    const auto score = [&](const Chromosome& c) {
        const auto delta = decode(c, portfolio, spec.domain, enc.bits);
        const auto e = evaluate(portfolio, model, delta);
        ++result.evaluations;
        detail::MemberScore s{objective_value(spec, e), residuals_from(spec, e, n), false};
        s.feasible = is_feasible(s.residuals, scale);
        return s;
    };

    auto population = initial_population(enc, config.population_size, rng);
    std::optional<Chromosome> incumbent;
    detail::MemberScore incumbent_score;
    std::optional<Chromosome> best_feasible;
    double best_feasible_objective = -std::numeric_limits<double>::infinity();
    std::vector<detail::MemberScore> scores(population.size());
    std::vector<double> penalized(population.size());

    for (int gen = 1; gen <= config.max_generations; ++gen) {
        int feasible_count = 0;
        for (std::size_t i = 0; i < population.size(); ++i) {
            scores[i] = score(population[i]);
            penalized[i] = scores[i].penalized(penalty.r);
            if (scores[i].feasible) {
                ++feasible_count;
                if (scores[i].objective > best_feasible_objective) {
                    best_feasible_objective = scores[i].objective;
                    best_feasible = population[i];
                }
            }
            if (!incumbent || penalized[i] < incumbent_score.penalized(penalty.r)) {
                incumbent = population[i];
                incumbent_score = scores[i];
            }
        }
        double mean = 0.0;
        for (double v : penalized) mean += v;
        mean /= static_cast<double>(penalized.size());
        result.ga_trace.push_back({gen, incumbent_score.penalized(penalty.r), mean, feasible_count, penalty.r});
        result.iterations = gen;
        if (gen == config.max_generations) break;

        if (!incumbent_score.feasible && penalty.r < kPenaltyCap) {
            penalty.r = std::min(penalty.r * penalty.growth, kPenaltyCap);
            for (std::size_t i = 0; i < population.size(); ++i) penalized[i] = scores[i].penalized(penalty.r);
        }

        const auto parents = select_parents(population, roulette_weights(penalized), rng);
        std::vector<Chromosome> next;
        next.reserve(parents.size());
        for (std::size_t i = 0; i + 1 < parents.size(); i += 2) {
            auto [a, b] = crossover(parents[i], parents[i + 1], config.crossover_prob, enc, rng);
            next.push_back(std::move(a));
            next.push_back(std::move(b));
        }
        if (next.size() < parents.size()) next.push_back(parents.back());
        for (auto& c : next) c = mutate(std::move(c), config.mutation_prob, enc, rng);
        next.front() = *incumbent;
        population = std::move(next);
    }

    const Chromosome& chosen = best_feasible ? *best_feasible : *incumbent;
    result.delta = decode(chosen, portfolio, spec.domain, enc.bits);
    const auto e = evaluate(portfolio, model, result.delta);
    result.objective = objective_value(spec, e);
    result.residuals = residuals_from(spec, e, n);
    result.feasible = is_feasible(result.residuals, scale);
    result.best_fitness = incumbent_score.penalized(penalty.r);
    result.status = SolverStatus::Completed;
    return result;
}

} // namespace pricopt
