#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "fracpod/inverse.hpp"
#include "fracpod/mlf.hpp"
#include "fracpod/mollify.hpp"
#include "fracpod/pod.hpp"
#include "fracpod/solver.hpp"
#include "oracles/mittag_leffler_series.hpp"
#include "support.hpp"

using namespace fracpod;
using testing_support::Gen;

namespace {

constexpr double pi = std::numbers::pi;

struct Problem {
    SpacePtr space;
    GradedMesh mesh;
    std::shared_ptr<const L1Kernel> kernel;
    double alpha;

    Problem(DomainSpec d, double h, double T, std::size_t N, double r, double alpha_)
        : space(build_space(d, h)),
          mesh(build_graded_mesh(T, N, r)),
          kernel(std::make_shared<const L1Kernel>(mesh, alpha_ / 2.0)),
          alpha(alpha_) {}

    Trajectory full(const std::function<double(Point)>& g) const {
        return solve_full(*space, mesh, *kernel, SourceSpec{interpolate(space, g), alpha});
    }
};

Problem example1() { return {DomainSpec::interval(pi), pi / 200.0, 0.1, 400, 5.0, 1.5}; }
Problem small1d() { return {DomainSpec::interval(pi), pi / 50.0, 0.1, 100, 5.0, 1.5}; }

double step(Point p) { return p.x <= pi / 2.0 ? 1.0 : 0.0; }

}  // namespace

TEST(SolveFull, ZeroSourceGivesZeroTrajectory) {
    const Problem p = small1d();
    const Trajectory t = p.full([](Point) { return 0.0; });
    EXPECT_EQ(t.U.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.V.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.steps(), 100u);
}

TEST(SolveFull, InitialColumnsZeroAndVIsL1QuotientOfU) {
    const Problem p = small1d();
    const Trajectory t = p.full(step);
    EXPECT_EQ(t.U.col(0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.V.col(0).cwiseAbs().maxCoeff(), 0.0);
    std::vector<double> hist;
    for (Eigen::Index i = 0; i < t.U.rows(); i += 7) {
        for (std::size_t n = 1; n <= t.steps(); ++n) {
            hist.clear();
            for (std::size_t k = 0; k <= n; ++k) {
                hist.push_back(t.U(i, static_cast<Eigen::Index>(k)));
            }
            const double q = apply_l1(*p.kernel, hist);
            const double v = t.V(i, static_cast<Eigen::Index>(n));
            EXPECT_LE(std::abs(q - v), 1e-10 * std::max(std::abs(v), t.V.row(i).cwiseAbs().maxCoeff() * 1e-6))
                << i << " " << n;
        }
    }
}

TEST(SolveFull, Linearity) {
    const Problem p = small1d();
    const Trajectory a = p.full(step);
    const Trajectory b = p.full([](Point q) { return 2.0 * step(q); });
    EXPECT_LE((b.U - 2.0 * a.U).cwiseAbs().maxCoeff(), 1e-12 * a.U.cwiseAbs().maxCoeff());
    EXPECT_LE((b.V - 2.0 * a.V).cwiseAbs().maxCoeff(), 1e-12 * a.V.cwiseAbs().maxCoeff());
}

TEST(SolveFull, Example1AgreesWithSpectralSolution) {
    const Problem p = example1();
    const Trajectory t = p.full([](Point q) { return std::sin(q.x); });
    const double amp = 0.1 * oracle::mittag_leffler_series(1.5, 2.0, -std::pow(0.1, 1.5));
    double err = 0.0;
    for (std::size_t i = 0; i < p.space->dof(); ++i) {
        err = std::max(err, std::abs(t.terminal()[Eigen::Index(i)] - amp * std::sin(p.space->nodes()[i].x)));
    }
    EXPECT_LE(err, 1e-4);
}

TEST(SolveFull, ModeProjectionMatchesScalarModeSolve) {
    const Problem p = small1d();
    const Trajectory t = p.full(step);
    const Field g = interpolate(p.space, step);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(p.space->stiffness(), p.space->mass());
    for (const int m : {0, 1, 2, 5, 12}) {
        const Eigen::VectorXd phi = es.eigenvectors().col(m);  // M-orthonormal
        const double mu = es.eigenvalues()[m];
        const double c = phi.dot(p.space->mass() * g.coeffs);
        const ModeSolution ms = mode_block_solve(*p.kernel, mu, c, p.mesh, p.alpha);
        const Eigen::VectorXd proj_u = t.U.transpose() * (p.space->mass() * phi);
        const Eigen::VectorXd proj_v = t.V.transpose() * (p.space->mass() * phi);
        double su = 0.0, sv = 0.0;
        for (std::size_t n = 1; n <= t.steps(); ++n) {
            su = std::max(su, std::abs(ms.U[n - 1]));
            sv = std::max(sv, std::abs(ms.V[n - 1]));
        }
        for (std::size_t n = 1; n <= t.steps(); ++n) {
            EXPECT_LE(std::abs(proj_u[Eigen::Index(n)] - ms.U[n - 1]), 1e-8 * su) << m << " " << n;
            EXPECT_LE(std::abs(proj_v[Eigen::Index(n)] - ms.V[n - 1]), 1e-8 * sv) << m << " " << n;
        }
    }
}

TEST(SolveFull, RejectsInconsistentInput) {
    const Problem p = small1d();
    const auto other = build_space(DomainSpec::interval(pi), pi / 50.0);
    EXPECT_FRACPOD_ERROR(solve_full(*p.space, p.mesh, *p.kernel, SourceSpec{Field::zero(other), 1.5}),
                         ErrorKind::SpaceMismatch);
    EXPECT_FRACPOD_ERROR(solve_full(*p.space, p.mesh, *p.kernel, SourceSpec{Field::zero(p.space), 1.6}),
                         ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(solve_full(*p.space, p.mesh, *p.kernel, SourceSpec{Field::zero(p.space), 2.0}),
                         ErrorKind::InvalidParameter);
}

TEST(SolveReduced, IdentityBasisMatchesFullSolve) {
    for (const Problem& p : {small1d(), Problem(DomainSpec::rectangle(1.0, 1.0), 0.125, 0.1, 40, 3.0, 1.25)}) {
        const auto g = [](Point q) { return std::sin(3.0 * q.x) + q.y; };
        const Trajectory full = p.full(g);
        const auto n = static_cast<Eigen::Index>(p.space->dof());
        const ReducedOperator op = make_reduced_operator(*p.space, Eigen::MatrixXd::Identity(n, n));
        const Trajectory red =
            op.lift(solve_reduced(op, p.mesh, *p.kernel, SourceSpec{interpolate(p.space, g), p.alpha}));
        EXPECT_LE(max_abs_difference(full, red), 1e-12 * full.U.cwiseAbs().maxCoeff());
    }
}

TEST(SolveReduced, ZeroSourceGivesZero) {
    const Problem p = small1d();
    Gen gen(41);
    const ReducedOperator op = make_reduced_operator(*p.space, gen.matrix(Eigen::Index(p.space->dof()), 4));
    const Trajectory t = solve_reduced(op, p.mesh, *p.kernel, SourceSpec{Field::zero(p.space), 1.5});
    EXPECT_EQ(t.U.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.U.rows(), 4);
}

TEST(SolveReduced, Example1SelfTrainedBasisReproducesFullSolve) {
    const Problem p = example1();
    const auto a1 = [](Point q) { return std::sin(q.x); };
    const Trajectory full = p.full(a1);
    const PodBasis basis = train_basis(collect_snapshots(full, *p.kernel, false, p.space), 5);
    const ReducedOperator op = make_reduced_operator(*p.space, basis.psi);
    const Trajectory red =
        op.lift(solve_reduced(op, p.mesh, *p.kernel, SourceSpec{interpolate(p.space, a1), p.alpha}));
    EXPECT_LE(max_abs_difference(full, red), 1e-10);
}

TEST(SolveReduced, RejectsBadBasis) {
    const Problem p = small1d();
    EXPECT_FRACPOD_ERROR(make_reduced_operator(*p.space, Eigen::MatrixXd(Eigen::Index(p.space->dof()), 0)),
                         ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(make_reduced_operator(*p.space, Eigen::MatrixXd::Identity(5, 2)),
                         ErrorKind::SpaceMismatch);
}

TEST(BatchedSolves, MatchSingleSolves) {
    const Problem p = small1d();
    Gen gen(42);
    const auto n = static_cast<Eigen::Index>(p.space->dof());
    const Eigen::MatrixXd profiles = gen.matrix(n, 3);
    const Eigen::MatrixXd T = solve_full_terminal(*p.space, p.mesh, *p.kernel, p.alpha, profiles);
    const Eigen::MatrixXd basis = gen.matrix(n, 4);
    const ReducedOperator op = make_reduced_operator(*p.space, basis);
    const Eigen::MatrixXd loads = gen.matrix(4, 3);
    const Eigen::MatrixXd R = solve_reduced_terminal(op, p.mesh, *p.kernel, p.alpha, loads);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const Trajectory t = solve_full(*p.space, p.mesh, *p.kernel, SourceSpec{Field(p.space, profiles.col(j)), p.alpha});
        EXPECT_LE((T.col(j) - t.terminal()).cwiseAbs().maxCoeff(), 1e-12 * t.terminal().cwiseAbs().maxCoeff());
        const Trajectory r = solve_reduced(op, p.mesh, *p.kernel, p.alpha, loads.col(j));
        EXPECT_LE((R.col(j) - r.terminal()).cwiseAbs().maxCoeff(), 1e-12 * r.terminal().cwiseAbs().maxCoeff());
    }
}

TEST(TerminalTrace, TrivialCasesAndMidpointValue) {
    const Problem p = example1();
    const Trajectory zero = p.full([](Point) { return 0.0; });
    for (const double v : terminal_trace(zero, p.space, std::vector<Point>{{1.0, 0.0}, {2.0, 0.0}})) {
        EXPECT_EQ(v, 0.0);
    }
    const Trajectory t = p.full([](Point q) { return std::sin(q.x); });
    const auto at_nodes = terminal_trace(t, p.space, p.space->nodes());
    for (std::size_t i = 0; i < at_nodes.size(); ++i) {
        EXPECT_NEAR(at_nodes[i], t.terminal()[Eigen::Index(i)], 1e-15);
    }
    const double mid = terminal_trace(t, p.space, std::vector<Point>{{pi / 2.0, 0.0}})[0];
    const double want = 0.1 * oracle::mittag_leffler_series(1.5, 2.0, -std::pow(0.1, 1.5));
    EXPECT_NEAR(mid, want, 1e-2 * want);
}

TEST(ErrorMeasures, Basics) {
    const Problem p = small1d();
    const Trajectory a = p.full(step);
    EXPECT_EQ(max_abs_difference(a, a), 0.0);
    EXPECT_EQ(mean_square_error(*p.space, a, a), 0.0);
    Trajectory b = a;
    b.U.array() += 1.0;
    b.U.col(0).setZero();
    EXPECT_DOUBLE_EQ(max_abs_difference(a, b), 1.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(a.U.rows());
    EXPECT_NEAR(mean_square_error(*p.space, a, b), ones.dot(p.space->mass() * ones), 1e-12);
}

TEST(PodErrorTrend, SelfTrainedBasisWithinTailEnvelope) {
    const Problem p = small1d();
    const Trajectory full = p.full(step);
    const SnapshotSet set = collect_snapshots(full, *p.kernel, false, p.space);
    const PodBasis basis = train_basis(set, 8);
    ASSERT_GE(basis.rank(), 8u);
    const Field g = interpolate(p.space, step);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m <= 8; ++m) {
        const ReducedOperator op = make_reduced_operator(*p.space, basis.psi.leftCols(Eigen::Index(m)));
        const Trajectory red = op.lift(solve_reduced(op, p.mesh, *p.kernel, SourceSpec{g, p.alpha}));
        const double mse = mean_square_error(*p.space, full, red);
        EXPECT_LE(mse, 1e3 * std::pow(100.0, 2.0 - p.alpha) * basis.tail(m)) << m;
        EXPECT_LT(mse, prev) << m;
        prev = mse;
    }
}

TEST(PodErrorTrend, ObservationTrainedBasisImprovesWithRank) {
    const Problem p = small1d();
    const auto a1 = [](Point q) { return std::sin(q.x) + 0.5 * std::sin(3.0 * q.x); };
    const Trajectory full = p.full(a1);
    const auto pts = quasi_uniform_points(p.space->domain(), 64);
    const auto obs = add_noise(pts, terminal_trace(full, p.space, pts), 0.005, 7);
    const Mollifier mol = Mollifier::for_domain(p.space->domain(), obs.points);
    const Field q = extend_to_field(mol, smooth(obs, mol, lambda_rule(obs, mol)), p.space);
    const Trajectory observed = solve_full(*p.space, p.mesh, *p.kernel, SourceSpec{q, p.alpha});
    const PodBasis basis = train_basis(collect_snapshots(observed, *p.kernel, false, p.space), 5);
    ASSERT_EQ(basis.rank(), 5u);
    std::vector<double> err;
    for (std::size_t m = 1; m <= 5; ++m) {
        const ReducedOperator op = make_reduced_operator(*p.space, basis.psi.leftCols(Eigen::Index(m)));
        const Trajectory red =
            op.lift(solve_reduced(op, p.mesh, *p.kernel, SourceSpec{interpolate(p.space, a1), p.alpha}));
        err.push_back(mean_square_error(*p.space, full, red));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        EXPECT_LE(err[i], err[i - 1]) << i;
    }
    EXPECT_LE(err.back(), err.front());
}
