#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "fracpod/fem.hpp"
#include "fracpod/timegrid.hpp"

namespace fracpod {

/// Spatial factor g(x) of the source g(x) omega_{2-alpha}(t), with the
/// fractional order alpha in (1, 2). g is the unknown initial velocity a_1
/// for the forward problem, or the measured data q for the observation
/// system.
struct SourceSpec {
    Field profile;
    double alpha = 1.5;
};

/// Coefficient histories of the coupled pair (u, v = d^nu u).
/// Column n of U and V holds U^n, V^n for n = 0..N; column 0 is zero.
struct Trajectory {
    Eigen::MatrixXd U;
    Eigen::MatrixXd V;
    std::vector<double> times;

    [[nodiscard]] std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] Eigen::VectorXd terminal() const { return U.col(U.cols() - 1); }
};

/// Full-order finite element solve of
///   (d^nu V^n, phi) + (grad U^n, grad phi) = (g omega_{2-alpha}(t_n), phi)
///   (grad V^n, grad phi) = (d^nu grad U^n, grad phi)
/// with the L1 quotient d^nu. The second equation gives V^n = d^nu U^n
/// nodally, so each step is one SPD solve with ((A^{(n)}_0)^2 M + S).
Trajectory solve_full(const FemSpace& space, const GradedMesh& mesh, const L1Kernel& kernel,
                      const SourceSpec& src);

/// Galerkin projection of the full-order operators onto the span of the
/// columns of `basis` (dof x p).
struct ReducedOperator {
    Eigen::MatrixXd basis;
    Eigen::MatrixXd mass;       ///< basis^T M basis
    Eigen::MatrixXd stiffness;  ///< basis^T S basis
    const FemSpace* space = nullptr;  ///< non-owning; must outlive the operator

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }

    /// basis^T M g.
    [[nodiscard]] Eigen::VectorXd reduced_load(const Field& profile) const;

    /// Maps reduced coefficients back to nodal coefficients.
    [[nodiscard]] Trajectory lift(const Trajectory& reduced) const;
};

ReducedOperator make_reduced_operator(const FemSpace& space, const Eigen::MatrixXd& basis);

/// Reduced-order solve; returns reduced coordinates (p x (N+1)).
Trajectory solve_reduced(const ReducedOperator& op, const GradedMesh& mesh,
                         const L1Kernel& kernel, const SourceSpec& src);

/// Reduced-order solve with a precomputed reduced load basis^T M g.
Trajectory solve_reduced(const ReducedOperator& op, const GradedMesh& mesh,
                         const L1Kernel& kernel, double alpha, const Eigen::VectorXd& load);

/// Terminal U^N for several source profiles (columns of `profiles`,
/// nodal coefficients) marched together with one factorization per step.
Eigen::MatrixXd solve_full_terminal(const FemSpace& space, const GradedMesh& mesh,
                                    const L1Kernel& kernel, double alpha,
                                    const Eigen::MatrixXd& profiles);

/// Reduced terminal coordinates for several reduced loads (columns).
Eigen::MatrixXd solve_reduced_terminal(const ReducedOperator& op, const GradedMesh& mesh,
                                       const L1Kernel& kernel, double alpha,
                                       const Eigen::MatrixXd& loads);

/// Point values of the terminal u field.
std::vector<double> terminal_trace(const Trajectory& traj, const SpacePtr& space,
                                   std::span<const Point> points);

/// (1/N) sum_{n=1}^N ||U_a^n - U_b^n||_{L2}^2 for two nodal trajectories.
double mean_square_error(const FemSpace& space, const Trajectory& a, const Trajectory& b);

/// max_{n, i} |U_a^n_i - U_b^n_i|.
double max_abs_difference(const Trajectory& a, const Trajectory& b);

}  // namespace fracpod
