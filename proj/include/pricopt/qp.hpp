#pragma once

// Dense convex QP with a few general inequality rows and simple bounds:
//
//   minimize    1/2 s^T Q s + c^T s
//   subject to  A s + h <= 0        (general rows)
//               lo <= s <= hi       (box rows)
//
// Solved exactly by the Goldfarb-Idnani dual active-set method: start from
// the unconstrained minimizer and repeatedly add the most violated row,
// dropping rows whose multiplier would turn negative. Box rows are unit
// normals, so each costs O(n) to scan instead of a dense product.

#include <pricopt/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace pricopt {

struct QpSubproblem {
    Eigen::MatrixXd Q;
    Eigen::VectorXd c;
    Eigen::MatrixXd A; // rows x n
    Eigen::VectorXd h;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    double relax_weight = 1e6; // elastic penalty used if the rows are inconsistent
    // Optional guess of the active box rows: +1 at hi, -1 at lo, 0 free.
    // A guess is only used if the reduced solution passes the full KKT check.
    std::vector<signed char> box_hint;
};

struct QpSolution {
    Eigen::VectorXd s;
    Eigen::VectorXd general_mult; // one per row of A
    Eigen::VectorXd upper_mult;   // s_j <= hi_j
    Eigen::VectorXd lower_mult;   // s_j >= lo_j
    double objective = 0.0;
    bool relaxed = false;
    int iterations = 0;
};

namespace detail {

// Constraint in Goldfarb-Idnani orientation: normal^T x >= rhs.
struct GiRow {
    int unit = -1;    // >= 0: normal is sign * e_unit
    double sign = 1.0;
    int dense = -1;   // >= 0: normal is column `dense` of the normals matrix
    double rhs = 0.0;
};

struct GiResult {
    bool feasible = false;
    Eigen::VectorXd x;
    std::vector<double> mult; // per row
    int iterations = 0;
};

class GoldfarbIdnani {
public:
    GoldfarbIdnani(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& normals,
                   std::vector<GiRow> rows)
        : n_(G.rows()), G_(G), g_(g), N_(normals), rows_(std::move(rows)) {}

    GiResult solve() {
        GiResult out;
        Eigen::LLT<Eigen::MatrixXd> llt(G_);
        if (llt.info() != Eigen::Success) throw DomainError("QP Hessian is not positive definite");
        // J = L^{-T}
        J_ = Eigen::MatrixXd::Identity(n_, n_);
        llt.matrixU().solveInPlace(J_);
        R_ = Eigen::MatrixXd::Zero(n_, n_);
        Eigen::VectorXd x = -llt.solve(g_);

        const auto m = static_cast<int>(rows_.size());
        std::vector<int> active;          // row indices, in R column order
        std::vector<double> u;            // multipliers of `active`
        std::vector<char> is_active(m, 0);
        std::vector<char> excluded(m, 0);
        double r_norm = 1.0;
        Eigen::VectorXd d(n_), z(n_), np(n_);
        std::vector<double> r;

        const int max_iter = 50 * (m + static_cast<int>(n_)) + 100;
        for (int iter = 0; iter < max_iter; ++iter) {
            out.iterations = iter + 1;
            // Most violated inactive row.
            int p = -1;
            double worst = 0.0;
            for (int i = 0; i < m; ++i) {
                if (is_active[i] || excluded[i]) continue;
                const double s = slack(i, x);
                if (s < -tolerance(i) && s < worst) {
                    worst = s;
                    p = i;
                }
            }
            if (p < 0) {
                out.feasible = true;
                out.x = x;
                out.mult.assign(m, 0.0);
                for (std::size_t k = 0; k < active.size(); ++k) out.mult[active[k]] = u[k];
                return out;
            }

            const Eigen::VectorXd x_old = x;
            const std::vector<int> active_old = active;
            const std::vector<double> u_old = u;
            normal(p, np);
            std::vector<double> u_plus = u;
            u_plus.push_back(0.0);
            double sp = slack(p, x);

            for (;;) {
                const int q = static_cast<int>(active.size());
                d.noalias() = J_.transpose() * np;
                z.noalias() = J_.rightCols(n_ - q) * d.tail(n_ - q);
                r.assign(q, 0.0);
                for (int i = q - 1; i >= 0; --i) {
                    double sum = 0.0;
                    for (int j = i + 1; j < q; ++j) sum += R_(i, j) * r[j];
                    r[i] = (d(i) - sum) / R_(i, i);
                }
                double t1 = std::numeric_limits<double>::infinity();
                int drop = -1;
                for (int k = 0; k < q; ++k) {
                    if (r[k] > 0.0 && u_plus[k] / r[k] < t1) {
                        t1 = u_plus[k] / r[k];
                        drop = k;
                    }
                }
                const double zn = z.dot(np);
                const double t2 = (z.squaredNorm() > 1e-30 && zn > 0.0) ? -sp / zn
                                                                         : std::numeric_limits<double>::infinity();
                const double t = std::min(t1, t2);
                if (!std::isfinite(t)) {
                    out.feasible = false;
                    out.x = x;
                    return out;
                }
                for (int k = 0; k < q; ++k) u_plus[k] -= t * r[k];
                u_plus[q] += t;
                if (!std::isfinite(t2)) {
                    remove(active, u_plus, is_active, drop);
                    continue;
                }
                x += t * z;
                if (t == t2) {
                    if (!add(d, q, r_norm)) {
                        // Numerically dependent on the active rows: skip it.
                        excluded[p] = 1;
                        rebuild(active_old, is_active);
                        active = active_old;
                        u = u_old;
                        x = x_old;
                        break;
                    }
                    active.push_back(p);
                    is_active[p] = 1;
                    u = u_plus;
                    break;
                }
                remove(active, u_plus, is_active, drop);
                sp = slack(p, x);
            }
        }
        throw DomainError("QP active-set iteration limit reached");
    }

private:
    double slack(int i, const Eigen::VectorXd& x) const {
        const auto& row = rows_[i];
        const double v = row.unit >= 0 ? row.sign * x(row.unit) : N_.col(row.dense).dot(x);
        return v - row.rhs;
    }

    double tolerance(int i) const { return 1e-12 * (1.0 + std::abs(rows_[i].rhs)); }

    void normal(int i, Eigen::VectorXd& out) const {
        const auto& row = rows_[i];
        if (row.unit >= 0) {
            out.setZero();
            out(row.unit) = row.sign;
        } else {
            out = N_.col(row.dense);
        }
    }

    // Givens rotations zero d(q+1..n-1); the new R column is d(0..q).
    bool add(Eigen::VectorXd& d, int q, double& r_norm) {
        for (Eigen::Index j = n_ - 1; j >= q + 1; --j) {
            double cc = d(j - 1);
            double ss = d(j);
            const double h = std::hypot(cc, ss);
            if (h == 0.0) continue;
            d(j) = 0.0;
            ss /= h;
            cc /= h;
            if (cc < 0.0) {
                cc = -cc;
                ss = -ss;
                d(j - 1) = -h;
            } else {
                d(j - 1) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (Eigen::Index k = 0; k < n_; ++k) {
                const double a = J_(k, j - 1);
                const double b = J_(k, j);
                J_(k, j - 1) = a * cc + b * ss;
                J_(k, j) = xny * (a + J_(k, j - 1)) - b;
            }
        }
        for (int i = 0; i <= q; ++i) R_(i, q) = d(i);
        if (std::abs(d(q)) <= std::numeric_limits<double>::epsilon() * r_norm) {
            for (int i = 0; i <= q; ++i) R_(i, q) = 0.0;
            return false;
        }
        r_norm = std::max(r_norm, std::abs(d(q)));
        return true;
    }

    // Remove active position `pos`, restoring R to upper-triangular form.
    void remove(std::vector<int>& active, std::vector<double>& u_plus, std::vector<char>& is_active, int pos) {
        const int q = static_cast<int>(active.size());
        is_active[active[pos]] = 0;
        active.erase(active.begin() + pos);
        u_plus.erase(u_plus.begin() + pos);
        for (int j = pos; j < q - 1; ++j) R_.col(j) = R_.col(j + 1);
        R_.col(q - 1).setZero();
        const int nq = q - 1;
        for (int j = pos; j < nq; ++j) {
            double cc = R_(j, j);
            double ss = R_(j + 1, j);
            const double h = std::hypot(cc, ss);
            if (h == 0.0) continue;
            cc /= h;
            ss /= h;
            R_(j + 1, j) = 0.0;
            if (cc < 0.0) {
                R_(j, j) = -h;
                cc = -cc;
                ss = -ss;
            } else {
                R_(j, j) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (int k = j + 1; k < nq; ++k) {
                const double a = R_(j, k);
                const double b = R_(j + 1, k);
                R_(j, k) = a * cc + b * ss;
                R_(j + 1, k) = xny * (a + R_(j, k)) - b;
            }
            for (Eigen::Index k = 0; k < n_; ++k) {
                const double a = J_(k, j);
                const double b = J_(k, j + 1);
                J_(k, j) = a * cc + b * ss;
                J_(k, j + 1) = xny * (J_(k, j) + a) - b;
            }
        }
    }

    // Refactor J and R from scratch for a given active set (rare path).
    void rebuild(const std::vector<int>& active, std::vector<char>& is_active) {
        Eigen::LLT<Eigen::MatrixXd> llt(G_);
        J_ = Eigen::MatrixXd::Identity(n_, n_);
        llt.matrixU().solveInPlace(J_);
        R_.setZero();
        std::fill(is_active.begin(), is_active.end(), 0);
        double r_norm = 1.0;
        Eigen::VectorXd np(n_), d(n_);
        int q = 0;
        for (int i : active) {
            normal(i, np);
            d.noalias() = J_.transpose() * np;
            add(d, q++, r_norm);
            is_active[i] = 1;
        }
    }

    Eigen::Index n_;
    const Eigen::MatrixXd& G_;
    const Eigen::VectorXd& g_;
    const Eigen::MatrixXd& N_;
    std::vector<GiRow> rows_;
    Eigen::MatrixXd J_;
    Eigen::MatrixXd R_;
};

inline void check_qp_shapes(const QpSubproblem& qp) {
    const auto n = qp.Q.rows();
    if (qp.Q.cols() != n || qp.c.size() != n || qp.lo.size() != n || qp.hi.size() != n ||
        (qp.A.rows() > 0 && qp.A.cols() != n) || qp.h.size() != qp.A.rows())
        throw DomainError("QP subproblem has inconsistent dimensions");
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(qp.lo(j) <= qp.hi(j))) throw DomainError("QP box has lo > hi");
}

} // namespace detail

inline QpSolution solve_qp(const QpSubproblem& qp);

namespace detail {

// Fix the hinted box rows at their bounds and solve over the rest. Returns
// nothing if the result is not optimal for the full QP; fixed rows whose
// multiplier came out negative are listed in `wrong`.
inline std::optional<QpSolution> solve_qp_fixed(const QpSubproblem& qp, const std::vector<signed char>& hint,
                                                std::vector<Eigen::Index>& wrong) {
    const auto n = qp.Q.rows();
    wrong.clear();
    std::vector<Eigen::Index> freev, fixed;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto h = hint[static_cast<std::size_t>(j)];
        if (h > 0 && std::isfinite(qp.hi(j))) {
            s(j) = qp.hi(j);
            fixed.push_back(j);
        } else if (h < 0 && std::isfinite(qp.lo(j))) {
            s(j) = qp.lo(j);
            fixed.push_back(j);
        } else {
            freev.push_back(j);
        }
    }
    if (fixed.empty()) return std::nullopt;
    const auto nf = static_cast<Eigen::Index>(freev.size());
    const auto m = qp.A.rows();

    QpSolution sol;
    sol.general_mult = Eigen::VectorXd::Zero(m);
    if (nf > 0) {
        QpSubproblem red;
        red.Q.resize(nf, nf);
        red.c.resize(nf);
        red.A.resize(m, nf);
        red.lo.resize(nf);
        red.hi.resize(nf);
        red.h = qp.h;
        red.relax_weight = qp.relax_weight;
        for (Eigen::Index a = 0; a < nf; ++a) {
            const auto i = freev[a];
            for (Eigen::Index b = 0; b < nf; ++b) red.Q(a, b) = qp.Q(i, freev[b]);
            double c = qp.c(i);
            for (auto k : fixed) c += qp.Q(i, k) * s(k);
            red.c(a) = c;
            red.A.col(a) = qp.A.col(i);
            red.lo(a) = qp.lo(i);
            red.hi(a) = qp.hi(i);
        }
        for (auto k : fixed) red.h += qp.A.col(k) * s(k);
        const auto rs = solve_qp(red);
        if (rs.relaxed) return std::nullopt;
        for (Eigen::Index a = 0; a < nf; ++a) s(freev[a]) = rs.s(a);
        sol.general_mult = rs.general_mult;
        sol.upper_mult = Eigen::VectorXd::Zero(n);
        sol.lower_mult = Eigen::VectorXd::Zero(n);
        for (Eigen::Index a = 0; a < nf; ++a) {
            sol.upper_mult(freev[a]) = rs.upper_mult(a);
            sol.lower_mult(freev[a]) = rs.lower_mult(a);
        }
        sol.iterations = rs.iterations;
    } else {
        sol.upper_mult = Eigen::VectorXd::Zero(n);
        sol.lower_mult = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i)
            if (qp.A.row(i).dot(s) + qp.h(i) > 1e-12 * (1.0 + std::abs(qp.h(i)))) return std::nullopt;
    }

    // Multipliers of the fixed rows from stationarity; all must be >= 0.
    const Eigen::VectorXd grad = qp.Q * s + qp.c + qp.A.transpose() * sol.general_mult;
    const double tol = 1e-12 * (1.0 + grad.cwiseAbs().maxCoeff());
    for (auto k : fixed) {
        if (hint[static_cast<std::size_t>(k)] > 0) {
            if (-grad(k) < -tol) wrong.push_back(k);
            sol.upper_mult(k) = std::max(0.0, -grad(k));
        } else {
            if (grad(k) < -tol) wrong.push_back(k);
            sol.lower_mult(k) = std::max(0.0, grad(k));
        }
    }
    if (!wrong.empty()) return std::nullopt;
    sol.s = s;
    sol.objective = 0.5 * s.dot(qp.Q * s) + qp.c.dot(s);
    return sol;
}

// Release wrongly fixed rows and retry; every round frees at least one row.
inline std::optional<QpSolution> solve_qp_hinted(const QpSubproblem& qp) {
    const auto n = static_cast<std::size_t>(qp.Q.rows());
    if (qp.box_hint.size() != n) return std::nullopt;
    auto hint = qp.box_hint;
    std::vector<Eigen::Index> wrong;
    for (int round = 0; round < 20; ++round) {
        if (std::none_of(hint.begin(), hint.end(), [](signed char h) { return h != 0; })) return std::nullopt;
        if (auto sol = solve_qp_fixed(qp, hint, wrong)) return sol;
        if (wrong.empty()) return std::nullopt;
        for (auto k : wrong) hint[static_cast<std::size_t>(k)] = 0;
    }
    return std::nullopt;
}

} // namespace detail

inline QpSolution solve_qp(const QpSubproblem& qp) {
    detail::check_qp_shapes(qp);
    if (auto hinted = detail::solve_qp_hinted(qp)) return *hinted;
    const auto n = qp.Q.rows();
    const auto m = qp.A.rows();

    // Rows: general first, then upper box, then lower box.
    const auto build_rows = [&](Eigen::Index extra) {
        std::vector<detail::GiRow> rows;
        for (Eigen::Index i = 0; i < m; ++i) rows.push_back({-1, 1.0, static_cast<int>(i), qp.h(i)});
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::isfinite(qp.hi(j))) rows.push_back({static_cast<int>(j), -1.0, -1, -qp.hi(j)});
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::isfinite(qp.lo(j))) rows.push_back({static_cast<int>(j), 1.0, -1, qp.lo(j)});
        for (Eigen::Index i = 0; i < extra; ++i) rows.push_back({static_cast<int>(n + i), 1.0, -1, 0.0});
        return rows;
    };

    const auto unpack = [&](const detail::GiResult& r, QpSolution& sol) {
        sol.s = r.x.head(n);
        sol.general_mult = Eigen::VectorXd::Zero(m);
        sol.upper_mult = Eigen::VectorXd::Zero(n);
        sol.lower_mult = Eigen::VectorXd::Zero(n);
        std::size_t k = 0;
        for (Eigen::Index i = 0; i < m; ++i) sol.general_mult(i) = r.mult[k++];
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::isfinite(qp.hi(j))) sol.upper_mult(j) = r.mult[k++];
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::isfinite(qp.lo(j))) sol.lower_mult(j) = r.mult[k++];
        sol.iterations = r.iterations;
        sol.objective = 0.5 * sol.s.dot(qp.Q * sol.s) + qp.c.dot(sol.s);
    };

    {
        // GI orientation: -a_i^T s >= h_i.
        const Eigen::MatrixXd normals = -qp.A.transpose();
        detail::GoldfarbIdnani gi(qp.Q, qp.c, normals, build_rows(0));
        const auto r = gi.solve();
        if (r.feasible) {
            QpSolution sol;
            unpack(r, sol);
            return sol;
        }
    }

    // Elastic relaxation: A s + h <= t, t >= 0, plus w * sum(t) + eps/2 |t|^2.
    const Eigen::Index ne = n + m;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(ne, ne);
    G.topLeftCorner(n, n) = qp.Q;
    const double eps = std::max(1e-10, 1e-8 * qp.Q.diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) G(n + i, n + i) = eps;
    Eigen::VectorXd g(ne);
    g.head(n) = qp.c;
    g.tail(m).setConstant(qp.relax_weight);
    Eigen::MatrixXd normals = Eigen::MatrixXd::Zero(ne, m);
    normals.topRows(n) = -qp.A.transpose();
    for (Eigen::Index i = 0; i < m; ++i) normals(n + i, i) = 1.0;
    detail::GoldfarbIdnani gi(G, g, normals, build_rows(m));
    const auto r = gi.solve();
    if (!r.feasible) throw DomainError("QP box constraints are infeasible");
    QpSolution sol;
    unpack(r, sol);
    sol.relaxed = true;
    return sol;
}

} // namespace pricopt
