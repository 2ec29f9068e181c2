#include <catch_amalgamated.hpp>

#include <pricopt/qp.hpp>
#include <pricopt/random.hpp>

using namespace pricopt;
using Catch::Matchers::WithinAbs;

namespace {

QpSubproblem box_qp(Eigen::MatrixXd Q, Eigen::VectorXd c, double half_width) {
    const auto n = Q.rows();
    QpSubproblem qp;
    qp.Q = std::move(Q);
    qp.c = std::move(c);
    qp.A.resize(0, n);
    qp.h.resize(0);
    qp.lo = Eigen::VectorXd::Constant(n, -half_width);
    qp.hi = Eigen::VectorXd::Constant(n, half_width);
    return qp;
}

// KKT residual of the QP: stationarity, feasibility, complementarity, signs.
double qp_kkt(const QpSubproblem& qp, const QpSolution& s) {
    Eigen::VectorXd g = qp.Q * s.s + qp.c + s.upper_mult - s.lower_mult;
    if (qp.A.rows() > 0) g += qp.A.transpose() * s.general_mult;
    double k = g.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
        const double r = qp.A.row(i).dot(s.s) + qp.h(i);
        k = std::max({k, r, std::abs(r * s.general_mult(i)), -s.general_mult(i)});
    }
    for (Eigen::Index j = 0; j < s.s.size(); ++j) {
        const double up = s.s(j) - qp.hi(j), lo = qp.lo(j) - s.s(j);
        k = std::max({k, up, lo, std::abs(up * s.upper_mult(j)), std::abs(lo * s.lower_mult(j)), -s.upper_mult(j),
                      -s.lower_mult(j)});
    }
    return k;
}

QpSubproblem random_qp(Rng& rng, Eigen::Index n, Eigen::Index m) {
    Eigen::MatrixXd B(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) B(i, j) = rng.uniform(-1, 1);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = rng.uniform(-3, 3);
    auto qp = box_qp(B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n), c, 0.5);
    qp.A.resize(m, n);
    qp.h.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) qp.A(i, j) = rng.uniform(-1, 1);
        qp.h(i) = rng.uniform(-0.5, 0.1); // origin feasible
    }
    return qp;
}

} // namespace

// ============================================================================
// Worked cases
// ============================================================================

TEST_CASE("diagonal QP clips the unconstrained optimum", "[qp]") {
    const auto qp = box_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1, -1), 0.5);
    const auto s = solve_qp(qp);
    CHECK_THAT(s.s(0), WithinAbs(0.5, 1e-14));
    CHECK_THAT(s.s(1), WithinAbs(0.5, 1e-14));
    CHECK_THAT(s.upper_mult(0), WithinAbs(0.5, 1e-14));
    CHECK_THAT(s.upper_mult(1), WithinAbs(0.5, 1e-14));
    CHECK(s.lower_mult.cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(s.relaxed);
}

TEST_CASE("zero gradient gives a zero step", "[qp]") {
    const auto qp = box_qp(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), 0.5);
    const auto s = solve_qp(qp);
    CHECK(s.s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.upper_mult.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.lower_mult.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("active general row", "[qp]") {
    auto qp = box_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1, -1), 0.5);
    qp.A = Eigen::RowVector2d(1, 1);
    qp.h = Eigen::VectorXd::Constant(1, -0.4);
    const auto s = solve_qp(qp);
    // min 1/2|s|^2 - s1 - s2 on s1 + s2 <= 0.4: s = (0.2, 0.2), multiplier 0.8.
    CHECK_THAT(s.s(0), WithinAbs(0.2, 1e-12));
    CHECK_THAT(s.s(1), WithinAbs(0.2, 1e-12));
    CHECK_THAT(s.general_mult(0), WithinAbs(0.8, 1e-12));
    CHECK(qp_kkt(qp, s) < 1e-10);
}

TEST_CASE("inconsistent rows fall back to the elastic problem", "[qp]") {
    auto qp = box_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0, 0), 0.5);
    qp.A = Eigen::RowVector2d(1, 1);
    qp.h = Eigen::VectorXd::Constant(1, 2.0); // needs s1 + s2 <= -2, box allows -1
    qp.relax_weight = 100.0;
    const auto s = solve_qp(qp);
    CHECK(s.relaxed);
    CHECK_THAT(s.s(0), WithinAbs(-0.5, 1e-9));
    CHECK_THAT(s.s(1), WithinAbs(-0.5, 1e-9));
}

TEST_CASE("shape errors", "[qp]") {
    auto qp = box_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0, 0), 0.5);
    qp.c = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(solve_qp(qp), DomainError);
    auto neg = box_qp(-Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0, 0), 0.5);
    CHECK_THROWS_AS(solve_qp(neg), DomainError);
}

// ============================================================================
// Properties
// ============================================================================

TEST_CASE("random QPs satisfy their KKT conditions", "[qp][property]") {
    Rng rng(101);
    for (int t = 0; t < 200; ++t) {
        const auto qp = random_qp(rng, 2 + static_cast<Eigen::Index>(rng.index(10)), static_cast<Eigen::Index>(rng.index(3)));
        const auto s = solve_qp(qp);
        CHECK_FALSE(s.relaxed);
        CHECK(qp_kkt(qp, s) < 1e-10);
    }
}

TEST_CASE("a box hint never changes the answer", "[qp][property]") {
    Rng rng(202);
    for (int t = 0; t < 200; ++t) {
        auto qp = random_qp(rng, 8, 2);
        const auto plain = solve_qp(qp);
        qp.box_hint.resize(8);
        for (auto& h : qp.box_hint) h = static_cast<signed char>(static_cast<int>(rng.index(3)) - 1);
        const auto hinted = solve_qp(qp);
        CHECK((hinted.s - plain.s).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(qp_kkt(qp, hinted) < 1e-10);
    }
}
