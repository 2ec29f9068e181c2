#pragma once

// JSON scenario files: where the portfolio comes from, which conversion
// model and problem to solve, and with which solver. run_scenario ties the
// pieces together; write_outputs emits the CSV tables and report.json.

#include <pricopt/ga.hpp>
#include <pricopt/oracle.hpp>
#include <pricopt/report.hpp>
#include <pricopt/simulator.hpp>
#include <pricopt/sqp.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

namespace pricopt {

using Json = nlohmann::json;

enum class SolverKind { Ga, Sqp, Oracle };

inline const char* to_string(SolverKind k) {
    switch (k) {
    case SolverKind::Ga: return "ga";
    case SolverKind::Sqp: return "sqp";
    case SolverKind::Oracle: return "oracle";
    }
    return "unknown";
}

enum class ModelKind { Step, Linear, Logistic };

struct ModelConfig {
    ModelKind kind = ModelKind::Step;
    StepParams step;
    LinearParams linear;
    double elasticity = -2.0;
    std::optional<double> base_rate; // logistic; empty: step-model rate at delta = 0
    std::optional<std::string> params_file;
};

enum class VolumeBoundsKind { Absolute, Growth, Competitors };

struct VolumeBoundsConfig {
    VolumeBoundsKind kind = VolumeBoundsKind::Growth;
    double a = 0.08;
    double b = 0.10;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::optional<SimConfig> simulate;
    std::optional<std::string> portfolio_file;
    DeltaBounds bounds;
    ModelConfig model;
    Objective objective = Objective::Volume;
    CountBounds count_bounds;
    VolumeBoundsConfig volume_bounds;
    DeltaDomain domain;
    SolverKind solver = SolverKind::Ga;
    GaConfig ga;
    std::optional<PenaltyConfig> penalty;
    SqpConfig sqp;
    OracleConfig oracle;

    void set_seed(std::uint64_t s) {
        seed = s;
        if (simulate) simulate->seed = s;
        ga.seed = mix_seed(s, 1);
        sqp.seed = mix_seed(s, 2);
    }

    void validate() const {
        if (!simulate == !portfolio_file) throw ValidationError("portfolio needs exactly one of 'simulate' or 'file'");
        if (model.kind == ModelKind::Step && solver == SolverKind::Sqp)
            throw ValidationError("the step model needs the ga or oracle solver");
        if (solver == SolverKind::Oracle && !domain.is_discrete())
            throw ValidationError("the oracle solver needs a grid domain");
        if (solver == SolverKind::Sqp && domain.is_discrete())
            throw ValidationError("the sqp solver needs a continuous domain");
    }
};

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

inline std::pair<double, double> read_pair(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(where + ": expected [number, number]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline StepMode parse_step_mode(const std::string& s) {
    if (s == "clamped_linear") return StepMode::ClampedLinear;
    if (s == "piecewise_constant") return StepMode::PiecewiseConstant;
    throw ParseError("model.mode: expected 'clamped_linear' or 'piecewise_constant'");
}

inline std::string resolve(const std::filesystem::path& base, const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() || base.empty() ? p.string() : (base / p).string();
}

} // namespace detail

inline ScenarioConfig parse_scenario(const Json& j, const std::filesystem::path& base_dir = {}) {
    using detail::check_keys;
    using detail::read;
    ScenarioConfig c;
    check_keys(j, {"seed", "portfolio", "delta_bounds", "model", "problem", "domain", "solver"}, "scenario");
    read(j, "seed", c.seed, "scenario");

    if (j.contains("delta_bounds")) {
        const auto [lo, hi] = detail::read_pair(j["delta_bounds"], "delta_bounds");
        c.bounds = {lo, hi};
    }

    if (!j.contains("portfolio")) throw ParseError("scenario: missing 'portfolio'");
    const auto& pj = j["portfolio"];
    check_keys(pj, {"simulate", "file"}, "portfolio");
    if (pj.contains("file")) {
        std::string f;
        read(pj, "file", f, "portfolio");
        c.portfolio_file = detail::resolve(base_dir, f);
    }
    if (pj.contains("simulate")) {
        const auto& sj = pj["simulate"];
        check_keys(sj, {"n", "base_low", "base_high", "split_point", "cheap_share", "rank_low", "rank_high", "lwb", "upb",
                        "n_other"},
                   "portfolio.simulate");
        SimConfig s;
        read(sj, "n", s.n, "simulate");
        read(sj, "base_low", s.base_low, "simulate");
        read(sj, "base_high", s.base_high, "simulate");
        read(sj, "split_point", s.split_point, "simulate");
        read(sj, "cheap_share", s.cheap_share, "simulate");
        read(sj, "rank_low", s.rank_low, "simulate");
        read(sj, "rank_high", s.rank_high, "simulate");
        read(sj, "lwb", s.lwb, "simulate");
        read(sj, "upb", s.upb, "simulate");
        read(sj, "n_other", s.n_other, "simulate");
        s.bounds = c.bounds;
        c.simulate = s;
    }

    if (j.contains("model")) {
        const auto& mj = j["model"];
        check_keys(mj, {"type", "c1", "c2", "mode", "alpha", "beta", "elasticity", "base_rate", "params_file"}, "model");
        std::string type = "step";
        read(mj, "type", type, "model");
        if (type == "step") c.model.kind = ModelKind::Step;
        else if (type == "linear") c.model.kind = ModelKind::Linear;
        else if (type == "logistic") c.model.kind = ModelKind::Logistic;
        else throw ParseError("model.type: expected 'step', 'linear' or 'logistic'");
        read(mj, "c1", c.model.step.c1, "model");
        read(mj, "c2", c.model.step.c2, "model");
        if (mj.contains("mode")) c.model.step.mode = detail::parse_step_mode(mj["mode"].get<std::string>());
        read(mj, "alpha", c.model.linear.alpha, "model");
        read(mj, "beta", c.model.linear.beta, "model");
        read(mj, "elasticity", c.model.elasticity, "model");
        if (mj.contains("base_rate")) c.model.base_rate = mj["base_rate"].get<double>();
        if (mj.contains("params_file")) c.model.params_file = detail::resolve(base_dir, mj["params_file"].get<std::string>());
    }

    if (!j.contains("problem")) throw ParseError("scenario: missing 'problem'");
    const auto& qj = j["problem"];
    check_keys(qj, {"objective", "count_bounds", "volume_bounds"}, "problem");
    std::string obj;
    read(qj, "objective", obj, "problem");
    if (obj == "volume") {
        c.objective = Objective::Volume;
        if (!qj.contains("count_bounds")) throw ParseError("problem: volume objective needs 'count_bounds'");
        const auto [lo, hi] = detail::read_pair(qj["count_bounds"], "problem.count_bounds");
        c.count_bounds = {lo, hi};
    } else if (obj == "count") {
        c.objective = Objective::Count;
        if (!qj.contains("volume_bounds")) throw ParseError("problem: count objective needs 'volume_bounds'");
        const auto& vj = qj["volume_bounds"];
        check_keys(vj, {"absolute", "growth", "competitors"}, "problem.volume_bounds");
        if (vj.size() != 1) throw ParseError("problem.volume_bounds: give exactly one of absolute, growth, competitors");
        const auto& [key, val] = *vj.items().begin();
        const auto [a, b] = detail::read_pair(val, "problem.volume_bounds." + key);
        c.volume_bounds.kind = key == "absolute" ? VolumeBoundsKind::Absolute
                               : key == "growth" ? VolumeBoundsKind::Growth
                                                 : VolumeBoundsKind::Competitors;
        c.volume_bounds.a = a;
        c.volume_bounds.b = b;
    } else {
        throw ParseError("problem.objective: expected 'volume' or 'count'");
    }

    if (j.contains("domain")) {
        const auto& dj = j["domain"];
        check_keys(dj, {"type", "values", "lower", "upper", "step"}, "domain");
        std::string type = "continuous";
        read(dj, "type", type, "domain");
        if (type == "grid") {
            if (dj.contains("values")) {
                c.domain = DeltaDomain::discrete(dj["values"].get<std::vector<double>>());
            } else {
                double lo = c.bounds.lower, hi = c.bounds.upper, step = 0.05;
                read(dj, "lower", lo, "domain");
                read(dj, "upper", hi, "domain");
                read(dj, "step", step, "domain");
                if (!(step > 0.0 && lo <= hi)) throw ParseError("domain: grid needs lower <= upper and step > 0");
                c.domain = DeltaDomain::uniform_grid(lo, hi, step);
            }
        } else if (type != "continuous") {
            throw ParseError("domain.type: expected 'continuous' or 'grid'");
        }
    }

    if (j.contains("solver")) {
        const auto& vj = j["solver"];
        check_keys(vj, {"name", "population_size", "crossover_prob", "mutation_prob", "max_generations", "bits_per_gene",
                        "penalty_r", "penalty_growth", "max_iterations", "kkt_tolerance", "starts", "max_combinations"},
                   "solver");
        std::string name = "ga";
        read(vj, "name", name, "solver");
        if (name == "ga") c.solver = SolverKind::Ga;
        else if (name == "sqp") c.solver = SolverKind::Sqp;
        else if (name == "oracle") c.solver = SolverKind::Oracle;
        else throw ParseError("solver.name: expected 'ga', 'sqp' or 'oracle'");
        read(vj, "population_size", c.ga.population_size, "solver");
        read(vj, "crossover_prob", c.ga.crossover_prob, "solver");
        read(vj, "mutation_prob", c.ga.mutation_prob, "solver");
        read(vj, "max_generations", c.ga.max_generations, "solver");
        read(vj, "bits_per_gene", c.ga.bits_per_gene, "solver");
        if (vj.contains("penalty_r")) {
            PenaltyConfig p;
            read(vj, "penalty_r", p.r, "solver");
            read(vj, "penalty_growth", p.growth, "solver");
            c.penalty = p;
        }
        read(vj, "max_iterations", c.sqp.max_iterations, "solver");
        read(vj, "kkt_tolerance", c.sqp.kkt_tolerance, "solver");
        read(vj, "starts", c.sqp.starts, "solver");
        read(vj, "max_combinations", c.oracle.max_combinations, "solver");
    }

    c.set_seed(c.seed);
    c.validate();
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError("scenario file '" + path + "': " + e.what());
    }
    return parse_scenario(j, std::filesystem::path(path).parent_path());
}

// Per-customer parameters: customer_id,alpha,beta or customer_id,base_rate,elasticity.
inline std::map<std::int64_t, std::pair<double, double>> load_params(const std::string& path,
                                                                      const char* first, const char* second) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open parameter file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("parameter file: missing header");
    const auto header = detail::split_csv(line);
    if (header.size() != 3 || header[0] != "customer_id" || header[1] != first || header[2] != second)
        throw ParseError(std::string("parameter file: header must be customer_id,") + first + "," + second);
    std::map<std::int64_t, std::pair<double, double>> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        std::int64_t id = 0;
        double a = 0.0, b = 0.0;
        if (cells.size() != 3 || !detail::parse_int(cells[0], id) || !detail::parse_double(cells[1], a) ||
            !detail::parse_double(cells[2], b))
            throw ParseError("parameter file row " + std::to_string(row) + ": malformed");
        if (!out.emplace(id, std::pair{a, b}).second)
            throw ParseError("parameter file: duplicate customer_id " + std::to_string(id));
    }
    return out;
}

inline PortfolioModel build_model(const ModelConfig& m, const Portfolio& portfolio) {
    std::optional<std::map<std::int64_t, std::pair<double, double>>> params;
    const auto lookup = [&](std::int64_t id) {
        const auto it = params->find(id);
        if (it == params->end()) throw ValidationError("parameter file has no row for customer_id " + std::to_string(id));
        return it->second;
    };
    switch (m.kind) {
    case ModelKind::Step:
        return PortfolioModel::step(portfolio, m.step);
    case ModelKind::Linear: {
        if (m.params_file) params = load_params(*m.params_file, "alpha", "beta");
        std::vector<LinearParams> v;
        for (const auto& q : portfolio) {
            if (params) {
                const auto [a, b] = lookup(q.customer_id());
                v.push_back({a, b});
            } else {
                v.push_back(m.linear);
            }
        }
        return PortfolioModel::linear(std::move(v));
    }
    case ModelKind::Logistic: {
        if (m.params_file) params = load_params(*m.params_file, "base_rate", "elasticity");
        std::vector<LogisticParams> v;
        for (const auto& q : portfolio) {
            if (params) {
                const auto [a, b] = lookup(q.customer_id());
                v.push_back({a, b});
            } else {
                const double base = m.base_rate ? *m.base_rate : detail::step_rate(m.step, q, q.base_premium());
                v.push_back({base, m.elasticity});
            }
        }
        return PortfolioModel::logistic(std::move(v));
    }
    }
    throw ValidationError("unknown model kind");
}

// Expected volume of competitor column k (1-based): sum_j P_kj pi_j(P_kj).
inline double competitor_volume(const Portfolio& portfolio, const PortfolioModel& model, std::size_t k) {
    if (k < 1 || k > portfolio.competitor_count())
        throw ValidationError("competitor column " + std::to_string(k) + " out of range");
    double v = 0.0;
    for (std::size_t j = 0; j < portfolio.size(); ++j) {
        const double p = portfolio[j].competitor_premiums()[k - 1];
        v += p * acceptance_at_premium(model[j], portfolio[j], p);
    }
    return v;
}

inline ProblemSpec build_spec(const ScenarioConfig& c, const Portfolio& portfolio, const PortfolioModel& model) {
    if (c.objective == Objective::Volume) return ProblemSpec::volume(c.count_bounds, c.domain);
    VolumeBounds b;
    switch (c.volume_bounds.kind) {
    case VolumeBoundsKind::Absolute:
        b = {c.volume_bounds.a, c.volume_bounds.b};
        break;
    case VolumeBoundsKind::Growth: {
        const double v0 = expected_volume(portfolio, model, baseline_delta(portfolio));
        b = {v0 * (1.0 + c.volume_bounds.a), v0 * (1.0 + c.volume_bounds.b)};
        break;
    }
    case VolumeBoundsKind::Competitors: {
        const double x = competitor_volume(portfolio, model, static_cast<std::size_t>(c.volume_bounds.a));
        const double y = competitor_volume(portfolio, model, static_cast<std::size_t>(c.volume_bounds.b));
        b = {std::min(x, y), std::max(x, y)};
        break;
    }
    }
    return ProblemSpec::count(b, c.domain);
}

inline Portfolio build_portfolio(const ScenarioConfig& c) {
    if (c.simulate) return simulate_portfolio(*c.simulate);
    return load_portfolio(*c.portfolio_file, c.bounds);
}

struct ScenarioOutcome {
    ScenarioConfig config;
    Portfolio portfolio;
    PortfolioModel model;
    ProblemSpec spec;
    SolverResult result;
    ScenarioReport report;
};

inline SolverResult run_solver(const ScenarioConfig& c, const ProblemSpec& spec, const Portfolio& portfolio,
                               const PortfolioModel& model) {
    switch (c.solver) {
    case SolverKind::Ga: return run_ga(spec, portfolio, model, c.ga, c.penalty);
    case SolverKind::Sqp: return run_sqp(spec, portfolio, model, c.sqp);
    case SolverKind::Oracle: return exhaustive_search(spec, portfolio, model, c.oracle);
    }
    throw ValidationError("unknown solver");
}

// Solver errors are caught and reported; the baseline is always filled in.
inline ScenarioOutcome run_scenario(const ScenarioConfig& config) {
    config.validate();
    auto portfolio = build_portfolio(config);
    auto model = build_model(config.model, portfolio);
    auto spec = build_spec(config, portfolio, model);
    spec.domain.check_against(portfolio);
    SolverResult result;
    std::string error;
    try {
        result = run_solver(config, spec, portfolio, model);
    } catch (const Error& e) {
        result = {};
        result.solver = to_string(config.solver);
        result.status = SolverStatus::Failed;
        error = e.what();
    }
    auto report = make_report(spec, portfolio, model, result);
    report.error = error;
    return {config, std::move(portfolio), std::move(model), std::move(spec), std::move(result), std::move(report)};
}

namespace detail {

// NaN and infinity are not JSON numbers.
inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

} // namespace detail

inline Json report_json(const ScenarioOutcome& o) {
    const auto& r = o.report;
    const auto& s = o.result;
    Json j;
    j["generator"] = std::string(Rng::kGeneratorName);
    j["seed"] = o.config.seed;
    j["n"] = r.n;
    j["objective"] = o.spec.objective == Objective::Volume ? "volume" : "count";
    if (o.spec.count_bounds) j["count_bounds"] = {o.spec.count_bounds->lower, o.spec.count_bounds->upper};
    if (o.spec.volume_bounds) j["volume_bounds"] = {o.spec.volume_bounds->lower, o.spec.volume_bounds->upper};
    j["baseline_volume"] = r.baseline_volume;
    j["baseline_count"] = r.baseline_count;
    j["volume"] = r.volume;
    j["count"] = r.count;
    j["volume_ratio"] = r.volume_ratio;
    j["count_ratio"] = r.count_ratio;
    j["mean_delta"] = r.mean_delta;
    j["mean_increase"] = r.mean_increase;
    j["mean_decrease"] = r.mean_decrease;
    j["n_increases"] = r.n_increases;
    j["n_decreases"] = r.n_decreases;
    j["n_zero"] = r.n_zero;
    j["residuals"] = {{"h1", r.residuals.h1}, {"h2", r.residuals.h2}};
    j["feasible"] = r.feasible;
    Json d;
    d["solver"] = s.solver;
    d["status"] = to_string(s.status);
    d["iterations"] = s.iterations;
    d["evaluations"] = s.evaluations;
    d["relaxed"] = s.relaxed;
    d["kkt_residual"] = detail::num(s.kkt_residual);
    d["best_fitness"] = detail::num(s.best_fitness);
    if (!r.error.empty()) d["error"] = r.error;
    j["solver"] = d;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_outputs(const std::filesystem::path& dir, const ScenarioOutcome& o) {
    std::filesystem::create_directories(dir);
    write_text(dir / "portfolio.csv", serialize_portfolio(o.portfolio));
    write_text(dir / "report.json", report_json(o).dump(2) + "\n");
    if (o.result.delta.empty()) return;
    std::ostringstream sol, pos, dist, trace;
    write_solution(sol, o.portfolio, o.model, o.result.delta);
    write_positions(pos, premium_position_histogram(o.portfolio, o.result.delta));
    write_delta_distribution(dist, delta_distribution(o.result.delta, o.spec.domain, o.config.bounds.lower,
                                                      o.config.bounds.upper));
    write_text(dir / "solution.csv", sol.str());
    write_text(dir / "positions.csv", pos.str());
    write_text(dir / "delta_distribution.csv", dist.str());
    if (!o.result.ga_trace.empty()) {
        write_ga_trace(trace, o.result.ga_trace);
        write_text(dir / "trace.csv", trace.str());
    } else if (!o.result.sqp_trace.empty()) {
        write_sqp_trace(trace, o.result.sqp_trace);
        write_text(dir / "trace.csv", trace.str());
    }
}

} // namespace pricopt
