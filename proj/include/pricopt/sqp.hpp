#pragma once

// Sequential quadratic programming for the differentiable conversion
// models. Works in scaled units (see ProblemScale): minimize
// f = -objective / scale.objective subject to c_i = h_i / scale.constraint
// <= 0 and the per-customer delta box.

#include <pricopt/objectives.hpp>
#include <pricopt/qp.hpp>
#include <pricopt/random.hpp>
#include <pricopt/result.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace pricopt {

struct SqpConfig {
    int max_iterations = 200;
    double kkt_tolerance = 1e-6;
    double backtrack = 0.5;     // alpha <- backtrack * alpha
    int max_halvings = 10;
    double armijo = 1e-4;
    double merit_r_margin = 2.0;
    int starts = 5;
    std::uint64_t seed = 1;

    void validate() const {
        if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
        if (!(kkt_tolerance > 0.0)) throw ValidationError("kkt_tolerance must be > 0");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw ValidationError("backtrack factor must lie in (0, 1)");
        if (max_halvings < 1) throw ValidationError("max_halvings must be >= 1");
        if (!(armijo > 0.0 && armijo < 0.5)) throw ValidationError("armijo slope must lie in (0, 0.5)");
        if (!(merit_r_margin > 1.0)) throw ValidationError("merit_r_margin must be > 1");
        if (starts < 1) throw ValidationError("starts must be >= 1");
    }
};

struct SqpState {
    std::vector<double> delta;
    double lambda = 0.0; // h1
    double beta = 0.0;   // h2
    std::vector<double> mu;    // delta_j <= upper_j
    std::vector<double> gamma; // delta_j >= lower_j
    Eigen::MatrixXd Q;

    static SqpState at(std::vector<double> delta) {
        SqpState s;
        const auto n = delta.size();
        s.delta = std::move(delta);
        s.mu.assign(n, 0.0);
        s.gamma.assign(n, 0.0);
        s.Q = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        return s;
    }
};

namespace detail {

// Scaled objective and constraint values with gradients at one point.
struct SqpPoint {
    double f = 0.0;
    double c[2] = {0.0, 0.0};
    Eigen::VectorXd gf;
    Eigen::MatrixXd gc; // 2 x n
    PointEval eval;
};

inline SqpPoint sqp_point(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                          std::span<const double> delta, const ProblemScale& scale) {
    if (!model.differentiable())
        throw UnsupportedModelError("SQP needs a linear or logistic conversion model");
    SqpPoint p;
    p.eval = evaluate(portfolio, model, delta, true);
    const auto n = static_cast<Eigen::Index>(portfolio.size());
    const auto res = residuals_from(spec, p.eval, portfolio.size());
    p.f = -objective_value(spec, p.eval) / scale.objective;
    p.c[0] = res.h1 / scale.constraint;
    p.c[1] = res.h2 / scale.constraint;
    p.gf.resize(n);
    p.gc.resize(2, n);
    const double nd = static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& q = portfolio[static_cast<std::size_t>(j)];
        const double pi = p.eval.prob[j];
        const double dpi = p.eval.dprob[j];
        const double dvol = q.base_premium() * pi + q.premium_at(delta[j]) * dpi;
        const double dobj = spec.objective == Objective::Volume ? dvol : dpi;
        const double dh = spec.objective == Objective::Volume ? dpi / nd : dvol;
        p.gf(j) = -dobj / scale.objective;
        p.gc(0, j) = dh / scale.constraint;
        p.gc(1, j) = -dh / scale.constraint;
    }
    return p;
}

inline Eigen::VectorXd lagrangian_grad(const SqpPoint& p, const SqpState& s) {
    Eigen::VectorXd g = p.gf + s.lambda * p.gc.row(0).transpose() + s.beta * p.gc.row(1).transpose();
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) += s.mu[j] - s.gamma[j];
    return g;
}

inline std::vector<double> project(const Portfolio& portfolio, std::span<const double> delta) {
    std::vector<double> out(delta.begin(), delta.end());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = std::clamp(out[j], portfolio[j].delta_lower(), portfolio[j].delta_upper());
    return out;
}

inline double merit_from(const SqpPoint& p, const Portfolio& portfolio, std::span<const double> delta, double r) {
    double viol = std::max(0.0, p.c[0]) + std::max(0.0, p.c[1]);
    for (std::size_t j = 0; j < delta.size(); ++j) {
        viol += std::max(0.0, delta[j] - portfolio[j].delta_upper());
        viol += std::max(0.0, portfolio[j].delta_lower() - delta[j]);
    }
    return p.f + r * viol;
}

inline double kkt_from(const SqpPoint& p, const SqpState& s, const Portfolio& portfolio) {
    double k = lagrangian_grad(p, s).cwiseAbs().maxCoeff();
    k = std::max({k, p.c[0], p.c[1], std::abs(s.lambda * p.c[0]), std::abs(s.beta * p.c[1]), -s.lambda, -s.beta});
    for (std::size_t j = 0; j < s.delta.size(); ++j) {
        const double f1 = s.delta[j] - portfolio[j].delta_upper();
        const double f2 = portfolio[j].delta_lower() - s.delta[j];
        k = std::max({k, f1, f2, std::abs(s.mu[j] * f1), std::abs(s.gamma[j] * f2), -s.mu[j], -s.gamma[j]});
    }
    return std::max(k, 0.0);
}

// Diagonal curvature estimate of f from one extra gradient evaluation;
// the problem is separable so the diagonal carries all of it.
inline Eigen::MatrixXd initial_hessian(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                                       const SqpPoint& p, std::span<const double> delta, const ProblemScale& scale) {
    constexpr double h = 1e-4;
    std::vector<double> shifted(delta.begin(), delta.end());
    std::vector<double> step(delta.size());
    double width = 0.0;
    for (std::size_t j = 0; j < shifted.size(); ++j) {
        const auto& q = portfolio[j];
        step[j] = shifted[j] + h <= q.delta_upper() ? h : -h;
        shifted[j] += step[j];
        width = std::max(width, q.delta_upper() - q.delta_lower());
    }
    const auto p2 = sqp_point(spec, portfolio, model, shifted, scale);
    const auto n = p.gf.size();
    Eigen::VectorXd d(n);
    for (Eigen::Index j = 0; j < n; ++j) d(j) = std::abs((p2.gf(j) - p.gf(j)) / step[j]);
    const double floor = std::max({1e-2 * d.maxCoeff(), p.gf.cwiseAbs().maxCoeff() / width, 1e-12});
    for (Eigen::Index j = 0; j < n; ++j) d(j) = std::max(d(j), floor);
    return d.asDiagonal();
}

} // namespace detail

// Quadratic model at the state's point, in scaled units.
inline QpSubproblem build_qp(const SqpState& state, const ProblemSpec& spec, const Portfolio& portfolio,
                             const PortfolioModel& model, std::optional<ProblemScale> scale = std::nullopt) {
    const auto sc = scale.value_or(natural_scale(spec, portfolio));
    const auto p = detail::sqp_point(spec, portfolio, model, state.delta, sc);
    const auto n = static_cast<Eigen::Index>(portfolio.size());
    QpSubproblem qp;
    qp.Q = state.Q;
    qp.c = p.gf;
    qp.A = p.gc;
    qp.h = Eigen::Vector2d(p.c[0], p.c[1]);
    qp.lo.resize(n);
    qp.hi.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& q = portfolio[static_cast<std::size_t>(j)];
        qp.lo(j) = q.delta_lower() - state.delta[j];
        qp.hi(j) = q.delta_upper() - state.delta[j];
    }
    return qp;
}

// Damped BFGS (Powell): y is blended with Qs so that y^T s >= 0.2 s^T Q s.
inline Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& Q, const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    if (s.norm() < 1e-14) return Q;
    const Eigen::VectorXd Qs = Q * s;
    const double sQs = s.dot(Qs);
    const double sy = s.dot(y);
    const double theta = sy >= 0.2 * sQs ? 1.0 : 0.8 * sQs / (sQs - sy);
    const Eigen::VectorXd yh = theta * y + (1.0 - theta) * Qs;
    Eigen::MatrixXd out = Q - Qs * Qs.transpose() / sQs + yh * yh.transpose() / yh.dot(s);
    return 0.5 * (out + out.transpose());
}

// l1 exact penalty. With the default unit scale the terms are in raw units.
inline double merit_value(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                          std::span<const double> delta, double r, ProblemScale scale = {}) {
    const auto e = evaluate(portfolio, model, delta);
    const auto res = residuals_from(spec, e, portfolio.size());
    double viol = (std::max(0.0, res.h1) + std::max(0.0, res.h2)) / scale.constraint;
    for (std::size_t j = 0; j < delta.size(); ++j) {
        viol += std::max(0.0, delta[j] - portfolio[j].delta_upper());
        viol += std::max(0.0, portfolio[j].delta_lower() - delta[j]);
    }
    return -objective_value(spec, e) / scale.objective + r * viol;
}

inline double kkt_residual(const SqpState& state, const ProblemSpec& spec, const Portfolio& portfolio,
                           const PortfolioModel& model, std::optional<ProblemScale> scale = std::nullopt) {
    const auto sc = scale.value_or(natural_scale(spec, portfolio));
    const auto p = detail::sqp_point(spec, portfolio, model, state.delta, sc);
    return detail::kkt_from(p, state, portfolio);
}

namespace detail {

struct SqpRun {
    SolverResult result;
    SqpState state;
};

inline SqpRun sqp_single(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                         const SqpConfig& config, std::span<const double> start) {
    const auto scale = natural_scale(spec, portfolio);
    const auto n = static_cast<Eigen::Index>(portfolio.size());
    SqpRun run;
    auto& result = run.result;
    auto& state = run.state;
    result.solver = "sqp";
    state = SqpState::at(project(portfolio, start));

    auto point = sqp_point(spec, portfolio, model, state.delta, scale);
    state.Q = initial_hessian(spec, portfolio, model, point, state.delta, scale);
    result.evaluations += 2;
    double r = 1.0;
    std::vector<signed char> hint;
    result.status = SolverStatus::MaxIterations;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        result.iterations = iter;
        auto qp = build_qp(state, spec, portfolio, model, scale);
        qp.relax_weight = std::max(1e3, 10.0 * r);
        qp.box_hint = hint;
        const auto sol = solve_qp(qp);
        hint.assign(static_cast<std::size_t>(n), 0);
        for (Eigen::Index j = 0; j < n; ++j)
            hint[j] = sol.upper_mult(j) > 0.0 ? 1 : (sol.lower_mult(j) > 0.0 ? -1 : 0);
        result.relaxed = result.relaxed || sol.relaxed;

        SqpState trial = state;
        trial.lambda = sol.general_mult(0);
        trial.beta = sol.general_mult(1);
        for (Eigen::Index j = 0; j < n; ++j) {
            trial.mu[j] = sol.upper_mult(j);
            trial.gamma[j] = sol.lower_mult(j);
        }
        double max_mult = std::max(trial.lambda, trial.beta);
        for (Eigen::Index j = 0; j < n; ++j) max_mult = std::max({max_mult, trial.mu[j], trial.gamma[j]});
        r = std::max(r, config.merit_r_margin * max_mult);

        const double phi0 = merit_from(point, portfolio, state.delta, r);
        const double step_size = sol.s.cwiseAbs().maxCoeff();
        if (step_size <= 1e-15) {
            state.lambda = trial.lambda;
            state.beta = trial.beta;
            state.mu = trial.mu;
            state.gamma = trial.gamma;
            const double kkt = kkt_from(point, state, portfolio);
            result.sqp_trace.push_back({iter, phi0, phi0, kkt, 0.0, r});
            result.status = kkt < config.kkt_tolerance ? SolverStatus::Converged : SolverStatus::Stalled;
            break;
        }

        const double viol = std::max(0.0, point.c[0]) + std::max(0.0, point.c[1]);
        const double slope = std::min(point.gf.dot(sol.s) - r * viol, -sol.s.dot(qp.Q * sol.s));

        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> next(state.delta.size());
        SqpPoint next_point;
        double phi = phi0;
        for (int k = 0; k <= config.max_halvings; ++k) {
            for (std::size_t j = 0; j < next.size(); ++j)
                next[j] = std::clamp(state.delta[j] + alpha * sol.s(static_cast<Eigen::Index>(j)),
                                     portfolio[j].delta_lower(), portfolio[j].delta_upper());
            next_point = sqp_point(spec, portfolio, model, next, scale);
            ++result.evaluations;
            phi = merit_from(next_point, portfolio, next, r);
            if (phi < phi0 && phi <= phi0 + config.armijo * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= config.backtrack;
        }
        if (!accepted) {
            result.status = SolverStatus::Stalled;
            break;
        }

        Eigen::VectorXd s(n);
        for (Eigen::Index j = 0; j < n; ++j) s(j) = next[j] - state.delta[j];
        const Eigen::VectorXd y = lagrangian_grad(next_point, trial) - lagrangian_grad(point, trial);
        trial.Q = bfgs_update(state.Q, s, y);
        trial.delta = next;
        state = std::move(trial);
        point = std::move(next_point);

        const double kkt = kkt_from(point, state, portfolio);
        result.sqp_trace.push_back({iter, phi0, phi, kkt, alpha, r});
        if (kkt < config.kkt_tolerance) {
            result.status = SolverStatus::Converged;
            break;
        }
    }

    result.delta = state.delta;
    result.objective = objective_value(spec, point.eval);
    result.residuals = residuals_from(spec, point.eval, portfolio.size());
    result.feasible = result.residuals.feasible(std::max(kFeasibilityTol, config.kkt_tolerance) * scale.constraint);
    result.kkt_residual = kkt_from(point, state, portfolio);
    result.multipliers = {state.lambda, state.beta};
    result.multipliers.insert(result.multipliers.end(), state.mu.begin(), state.mu.end());
    result.multipliers.insert(result.multipliers.end(), state.gamma.begin(), state.gamma.end());
    return run;
}

} // namespace detail

// Runs from `start` if given, otherwise from delta = 0 plus
// config.starts - 1 random starts inside the box; the best feasible result
// (highest objective, earliest start on ties) is returned.
inline SolverResult run_sqp(const ProblemSpec& spec, const Portfolio& portfolio, const PortfolioModel& model,
                            const SqpConfig& config = {}, std::optional<std::vector<double>> start = std::nullopt) {
    spec.validate();
    config.validate();
    model.check_matches(portfolio);
    if (spec.domain.is_discrete()) throw ValidationError("SQP needs a continuous delta domain");
    if (!model.differentiable()) throw UnsupportedModelError("SQP needs a linear or logistic conversion model");
    const auto n = portfolio.size();
    if (start) {
        if (start->size() != n) throw DomainError("start vector length differs from portfolio size");
        return detail::sqp_single(spec, portfolio, model, config, *start).result;
    }

    std::optional<SolverResult> best;
    std::uint64_t evaluations = 0;
    const auto better = [](const SolverResult& a, const SolverResult& b) {
        if (a.feasible != b.feasible) return a.feasible;
        if (!a.feasible) return a.residuals.violation() < b.residuals.violation();
        return a.objective > b.objective;
    };
    for (int k = 0; k < config.starts; ++k) {
        std::vector<double> s(n, 0.0);
        if (k > 0) {
            Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(k)));
            for (std::size_t j = 0; j < n; ++j) s[j] = rng.uniform(portfolio[j].delta_lower(), portfolio[j].delta_upper());
        }
        auto r = detail::sqp_single(spec, portfolio, model, config, s).result;
        evaluations += r.evaluations;
        if (!best || better(r, *best)) best = std::move(r);
    }
    best->evaluations = evaluations;
    return *best;
}

} // namespace pricopt
