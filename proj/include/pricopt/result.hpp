#pragma once

#include <pricopt/objectives.hpp>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pricopt {

enum class SolverStatus {
    Converged,     // SQP: KKT residual below tolerance
    MaxIterations, // SQP: iteration budget spent
    Stalled,       // SQP: line search could not decrease the merit function
    Completed,     // GA: ran to the generation limit; oracle: enumeration finished
    Failed,
};

inline const char* to_string(SolverStatus s) {
    switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::Stalled: return "stalled";
    case SolverStatus::Completed: return "completed";
    case SolverStatus::Failed: return "failed";
    }
    return "unknown";
}

struct GaTraceRow {
    int generation = 0;
    double best = 0.0; // incumbent penalized value (lower is better)
    double mean = 0.0; // population mean penalized value
    int feasible_count = 0;
    double penalty = 0.0; // r in force during this generation
};

struct SqpTraceRow {
    int iter = 0;
    double phi_before = 0.0;
    double phi = 0.0; // merit value after the accepted step
    double kkt_residual = 0.0;
    double alpha = 0.0;
    double merit_r = 0.0;
};

struct SolverResult {
    std::string solver;
    SolverStatus status = SolverStatus::Failed;
    std::vector<double> delta;
    double objective = 0.0;
    Residuals residuals;
    bool feasible = false;
    bool relaxed = false; // SQP: some QP subproblem needed elastic relaxation
    int iterations = 0;   // generations, SQP iterations, or combinations enumerated
    std::uint64_t evaluations = 0;
    double kkt_residual = std::numeric_limits<double>::quiet_NaN();
    double best_fitness = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> multipliers; // SQP: lambda, beta, then mu (n), then gamma (n)
    std::vector<GaTraceRow> ga_trace;
    std::vector<SqpTraceRow> sqp_trace;
};

// Feasibility tolerance in the solvers' scaled constraint units.
inline constexpr double kFeasibilityTol = 1e-9;

inline bool is_feasible(const Residuals& r, const ProblemScale& scale) {
    return r.feasible(kFeasibilityTol * scale.constraint);
}

} // namespace pricopt
