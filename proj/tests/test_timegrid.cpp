#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <vector>

#include "fracpod/mlf.hpp"
#include "fracpod/timegrid.hpp"
#include "support.hpp"

using namespace fracpod;
using testing_support::Gen;
using testing_support::rel_err;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// Exact integral of omega_{1-nu}(t_n - s) / tau_k over [t_{k-1}, t_k] in
// 50-digit arithmetic, naive difference of antiderivatives.
double l1_reference(const GradedMesh& m, double nu, std::size_t n, std::size_t k) {
    const Big tn = m.t[n], tk = m.t[k], tk1 = m.t[k - 1], p = 1.0 - Big(nu);
    const Big a = pow(tn - tk1, p);
    const Big b = tn == tk ? Big(0) : pow(tn - tk, p);
    return static_cast<double>((a - b) / ((tk - tk1) * boost::math::tgamma(2 - Big(nu))));
}

}  // namespace

TEST(GradedMesh, UniformCase) {
    const auto m = build_graded_mesh(1.0, 4, 1.0);
    const std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0};
    EXPECT_EQ(m.t, expected);
    ASSERT_EQ(m.tau.size(), 4u);
    EXPECT_DOUBLE_EQ(m.step(1), 0.25);
}

TEST(GradedMesh, QuadraticGrading) {
    const auto m = build_graded_mesh(1.0, 2, 2.0);
    EXPECT_EQ(m.t, (std::vector<double>{0.0, 0.25, 1.0}));
}

TEST(GradedMesh, FirstNodeOfReferenceGrid) {
    const auto m = build_graded_mesh(0.1, 400, 5.0);
    EXPECT_LE(rel_err(m.t[1], 0.1 * std::pow(1.0 / 400.0, 5.0)), 1e-15);
    EXPECT_EQ(m.t.back(), 0.1);
}

TEST(GradedMesh, RejectsInvalidParameters) {
    EXPECT_FRACPOD_ERROR(build_graded_mesh(1.0, 0, 1.0), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(build_graded_mesh(0.0, 4, 1.0), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(build_graded_mesh(-1.0, 4, 1.0), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(build_graded_mesh(1.0, 4, 0.5), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(build_graded_mesh(1.0, 4, kMaxGrading + 1.0), ErrorKind::InvalidParameter);
}

TEST(GradedMesh, OptimalGrading) {
    EXPECT_DOUBLE_EQ(optimal_grading(0.75), 5.0);
    EXPECT_DOUBLE_EQ(optimal_grading(0.625), 1.375 / 0.375);
}

TEST(GradedMeshProperty, EndpointsMonotoneAndPowerLaw) {
    Gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double T = g.log_uniform(1e-3, 10.0);
        const auto N = static_cast<std::size_t>(g.integer(1, 300));
        const double r = g.uniform(1.0, 8.0);
        const auto m = build_graded_mesh(T, N, r);
        ASSERT_EQ(m.t.size(), N + 1);
        EXPECT_EQ(m.t.front(), 0.0);
        EXPECT_EQ(m.t.back(), T);
        for (std::size_t n = 1; n <= N; ++n) {
            ASSERT_GT(m.t[n], m.t[n - 1]);
            const double want = T * std::pow(static_cast<double>(n) / static_cast<double>(N), r);
            EXPECT_LE(std::abs(m.t[n] - want), 4.0 * std::numeric_limits<double>::epsilon() * want);
            EXPECT_DOUBLE_EQ(m.tau[n - 1], m.t[n] - m.t[n - 1]);
        }
    }
}

TEST(L1Kernel, UniformClosedForm) {
    const double nu = 0.75;
    const auto m = build_graded_mesh(1.0, 20, 1.0);
    const L1Kernel k = l1_coefficients(m, nu);
    const double tau = 0.05;
    const double scale = std::pow(tau, -nu) / std::tgamma(2.0 - nu);
    for (std::size_t n = 1; n <= 20; ++n) {
        for (std::size_t lag = 0; lag < n; ++lag) {
            const double want = scale * (std::pow(lag + 1.0, 1.0 - nu) - std::pow(double(lag), 1.0 - nu));
            EXPECT_LE(rel_err(k.coeff(n, lag), want), 1e-12) << n << " " << lag;
        }
    }
}

TEST(L1Kernel, DiagonalClosedFormOnGradedMesh) {
    const auto m = build_graded_mesh(0.1, 400, 5.0);
    const double nu = 0.75;
    const L1Kernel k(m, nu);
    for (std::size_t n = 1; n <= 400; n += 13) {
        EXPECT_LE(rel_err(k.coeff(n, 0), std::pow(m.step(n), -nu) / std::tgamma(2.0 - nu)), 1e-12);
    }
}

TEST(L1Kernel, RejectsOrderOutsideUnitInterval) {
    const auto m = build_graded_mesh(1.0, 4, 1.0);
    EXPECT_FRACPOD_ERROR(l1_coefficients(m, 0.0), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(l1_coefficients(m, 1.0), ErrorKind::InvalidParameter);
}

TEST(L1KernelProperty, MatchesExactIntegralPositiveAndMonotone) {
    Gen g(12);
    for (int trial = 0; trial < 60; ++trial) {
        const auto N = static_cast<std::size_t>(g.integer(1, 60));
        const double r = g.uniform(1.0, 6.0);
        const double nu = g.uniform(0.05, 0.95);
        const auto m = build_graded_mesh(g.log_uniform(1e-2, 5.0), N, r);
        const L1Kernel k(m, nu);
        for (std::size_t n = 1; n <= N; ++n) {
            for (std::size_t kk = 1; kk <= n; ++kk) {
                const double c = k.coeff(n, n - kk);
                ASSERT_GT(c, 0.0);
                EXPECT_LE(rel_err(c, l1_reference(m, nu, n, kk)), 1e-10);
            }
            for (std::size_t lag = 1; lag < n; ++lag) {
                EXPECT_GT(k.coeff(n, lag - 1), k.coeff(n, lag));
            }
        }
    }
}

TEST(ApplyL1, ConstantHistoryGivesZero) {
    const auto m = build_graded_mesh(1.0, 10, 2.0);
    const L1Kernel k(m, 0.4);
    const std::vector<double> h(11, 3.7);
    EXPECT_EQ(apply_l1(k, h), 0.0);
}

TEST(ApplyL1, SingleStep) {
    const auto m = build_graded_mesh(1.0, 10, 2.0);
    const L1Kernel k(m, 0.4);
    EXPECT_DOUBLE_EQ(apply_l1(k, std::vector<double>{0.0, 1.0}), k.coeff(1, 0));
}

TEST(ApplyL1, ExactOnLinearFunctions) {
    for (const double r : {1.0, 3.0, 5.0}) {
        const double nu = 0.75;
        const auto m = build_graded_mesh(0.1, 50, r);
        const L1Kernel k(m, nu);
        for (std::size_t n = 1; n <= 50; ++n) {
            std::vector<double> h(m.t.begin(), m.t.begin() + static_cast<long>(n) + 1);
            const double want = std::pow(m.t[n], 1.0 - nu) / std::tgamma(2.0 - nu);
            EXPECT_LE(rel_err(apply_l1(k, h), want), 1e-12) << "r=" << r << " n=" << n;
        }
    }
}

TEST(ApplyL1, RejectsBadHistoryLength) {
    const auto m = build_graded_mesh(1.0, 3, 1.0);
    const L1Kernel k(m, 0.5);
    EXPECT_FRACPOD_ERROR(apply_l1(k, std::vector<double>{1.0}), ErrorKind::LengthMismatch);
    EXPECT_FRACPOD_ERROR(apply_l1(k, std::vector<double>(5, 0.0)), ErrorKind::LengthMismatch);
}

TEST(ComplementaryKernel, FirstEntryIsReciprocal) {
    const auto m = build_graded_mesh(1.0, 8, 2.0);
    const double nu = 0.75;
    const ComplementaryKernel p = complementary_kernel(L1Kernel(m, nu));
    EXPECT_LE(rel_err(p.coeff(1, 0), std::tgamma(2.0 - nu) * std::pow(m.step(1), nu)), 1e-14);
}

TEST(ComplementaryKernelProperty, IdentityAndBound) {
    Gen g(13);
    for (int trial = 0; trial < 40; ++trial) {
        const auto N = static_cast<std::size_t>(trial == 0 ? 8 : g.integer(1, 80));
        const double r = trial == 0 ? 2.0 : g.uniform(1.0, 6.0);
        const double nu = trial == 0 ? 0.75 : g.uniform(0.05, 0.95);
        const auto m = build_graded_mesh(g.log_uniform(1e-2, 5.0), N, r);
        const L1Kernel a(m, nu);
        const ComplementaryKernel p(a);
        for (std::size_t n = 1; n <= N; ++n) {
            for (std::size_t k = 1; k <= n; ++k) {
                double s = 0.0;
                for (std::size_t j = k; j <= n; ++j) {
                    s += p.coeff(n, n - j) * a.coeff(j, j - k);
                }
                EXPECT_NEAR(s, 1.0, 1e-12) << "n=" << n << " k=" << k;
            }
            for (std::size_t j = 1; j <= n; ++j) {
                const double v = p.coeff(n, n - j);
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, std::tgamma(2.0 - nu) * std::pow(m.step(j), nu) * (1.0 + 1e-12));
            }
        }
    }
}

TEST(L1KernelProperty, FractionalInequality) {
    Gen g(14);
    for (int trial = 0; trial < 200; ++trial) {
        const auto N = static_cast<std::size_t>(g.integer(1, 40));
        const auto m = build_graded_mesh(g.log_uniform(1e-2, 2.0), N, g.uniform(1.0, 6.0));
        const L1Kernel k(m, g.uniform(0.05, 0.95));
        std::vector<double> v(N + 1, 0.0), v2(N + 1, 0.0);
        for (std::size_t n = 1; n <= N; ++n) {
            v[n] = g.normal() * g.log_uniform(1e-2, 1e2);
            v2[n] = v[n] * v[n];
        }
        for (std::size_t n = 1; n <= N; ++n) {
            const std::span<const double> hv(v.data(), n + 1), hv2(v2.data(), n + 1);
            const double lhs = v[n] * apply_l1(k, hv);
            const double rhs = 0.5 * apply_l1(k, hv2);
            EXPECT_GE(lhs - rhs, -1e-12 * std::max(1.0, std::abs(lhs))) << trial << " " << n;
        }
    }
}

namespace {

// Dense LU solve of the 2N x 2N block system [[A, mu I], [I, -A]] [V; U] = c [omega; 0].
std::pair<Eigen::VectorXd, Eigen::VectorXd> block_oracle(const GradedMesh& m, const L1Kernel& k,
                                                         double mu, double c, double alpha) {
    const auto N = static_cast<Eigen::Index>(m.N);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    // (A v)_n = sum_k a_{n-k} (v_k - v_{k-1}) with v_0 = 0.
    for (Eigen::Index n = 1; n <= N; ++n) {
        for (Eigen::Index kk = 1; kk <= n; ++kk) {
            const double a = k.coeff(static_cast<std::size_t>(n), static_cast<std::size_t>(n - kk));
            A(n - 1, kk - 1) += a;
            if (kk >= 2) {
                A(n - 1, kk - 2) -= a;
            }
        }
    }
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    B.topLeftCorner(N, N) = A;
    B.topRightCorner(N, N) = mu * Eigen::MatrixXd::Identity(N, N);
    B.bottomLeftCorner(N, N) = Eigen::MatrixXd::Identity(N, N);
    B.bottomRightCorner(N, N) = -A;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * N);
    for (Eigen::Index n = 1; n <= N; ++n) {
        rhs[n - 1] = c * std::pow(m.t[static_cast<std::size_t>(n)], 1.0 - alpha) / std::tgamma(2.0 - alpha);
    }
    const Eigen::VectorXd x = B.fullPivLu().solve(rhs);
    return {x.head(N), x.tail(N)};
}

}  // namespace

TEST(ModeBlockSolve, ZeroSourceGivesZero) {
    const auto m = build_graded_mesh(0.1, 20, 5.0);
    const L1Kernel k(m, 0.75);
    const auto s = mode_block_solve(k, 3.0, 0.0, m, 1.5);
    for (std::size_t n = 0; n < 20; ++n) {
        EXPECT_EQ(s.U[n], 0.0);
        EXPECT_EQ(s.V[n], 0.0);
    }
}

TEST(ModeBlockSolve, Linearity) {
    const auto m = build_graded_mesh(0.1, 30, 5.0);
    const L1Kernel k(m, 0.75);
    const auto a = mode_block_solve(k, 2.0, 1.0, m, 1.5);
    const auto b = mode_block_solve(k, 2.0, 2.0, m, 1.5);
    for (std::size_t n = 0; n < 30; ++n) {
        EXPECT_EQ(b.U[n], 2.0 * a.U[n]);
        EXPECT_EQ(b.V[n], 2.0 * a.V[n]);
    }
}

TEST(ModeBlockSolve, MatchesDenseBlockSystem) {
    Gen g(15);
    for (int trial = 0; trial < 20; ++trial) {
        const auto N = static_cast<std::size_t>(g.integer(2, 40));
        const double nu = g.uniform(0.55, 0.95);
        const auto m = build_graded_mesh(g.uniform(0.05, 1.0), N, g.uniform(1.0, 4.0));
        const L1Kernel k(m, nu);
        const double mu = g.uniform(0.0, 50.0);
        const auto s = mode_block_solve(k, mu, 1.0, m, 2.0 * nu);
        const auto [V, U] = block_oracle(m, k, mu, 1.0, 2.0 * nu);
        const double su = U.cwiseAbs().maxCoeff(), sv = V.cwiseAbs().maxCoeff();
        for (std::size_t n = 0; n < N; ++n) {
            EXPECT_LE(std::abs(s.U[n] - U[static_cast<Eigen::Index>(n)]), 1e-10 * su);
            EXPECT_LE(std::abs(s.V[n] - V[static_cast<Eigen::Index>(n)]), 1e-10 * sv);
        }
    }
}

TEST(ModeBlockSolve, MatchesScalarRecursion) {
    const auto m = build_graded_mesh(0.1, 200, 5.0);
    const double nu = 0.75, mu = 4.0;
    const L1Kernel k(m, nu);
    const auto s = mode_block_solve(k, mu, 1.0, m, 1.5);
    std::vector<double> U(201, 0.0), V(201, 0.0);
    for (std::size_t n = 1; n <= 200; ++n) {
        // Unknown-free parts of the two L1 sums at step n.
        double hu = -k.coeff(n, 0) * U[n - 1], hv = -k.coeff(n, 0) * V[n - 1];
        for (std::size_t j = 1; j < n; ++j) {
            hu += k.coeff(n, n - j) * (U[j] - U[j - 1]);
            hv += k.coeff(n, n - j) * (V[j] - V[j - 1]);
        }
        const double a0 = k.coeff(n, 0);
        const double w = std::pow(m.t[n], -0.5) / std::tgamma(0.5);
        U[n] = (w - hv - a0 * hu) / (a0 * a0 + mu);
        V[n] = a0 * U[n] + hu;
    }
    for (std::size_t n = 1; n <= 200; ++n) {
        EXPECT_LE(std::abs(s.U[n - 1] - U[n]), 1e-12 * std::abs(U[n]) + 1e-300);
        EXPECT_LE(std::abs(s.V[n - 1] - V[n]), 1e-12 * std::abs(V[n]) + 1e-300);
    }
}

TEST(ModeBlockSolve, TerminalValueAgreesWithSpectralFormula) {
    const auto m = build_graded_mesh(0.1, 400, 5.0);
    const L1Kernel k(m, 0.75);
    const auto s = mode_block_solve(k, 1.0, 1.0, m, 1.5);
    const double want = 0.1 * mittag_leffler(1.5, 2.0, -std::pow(0.1, 1.5));
    EXPECT_LE(rel_err(s.U.back(), want), 1e-3);
}

TEST(ModeBlockSolve, RejectsInconsistentInput) {
    const auto m = build_graded_mesh(0.1, 10, 5.0);
    const L1Kernel k(m, 0.75);
    EXPECT_FRACPOD_ERROR(mode_block_solve(k, -1.0, 1.0, m, 1.5), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(mode_block_solve(k, 1.0, 1.0, m, 1.4), ErrorKind::InvalidParameter);
    EXPECT_FRACPOD_ERROR(mode_block_solve(k, 1.0, 1.0, build_graded_mesh(0.1, 11, 5.0), 1.5),
                         ErrorKind::LengthMismatch);
}
