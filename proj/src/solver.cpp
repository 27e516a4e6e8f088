#include "fracpod/solver.hpp"

#include <cmath>
#include <string>

#include "fracpod/error.hpp"

namespace fracpod {

namespace {

void check_setup(const GradedMesh& mesh, const L1Kernel& kernel, double alpha) {
    require(alpha > 1.0 && alpha < 2.0, ErrorKind::InvalidParameter,
            "fractional order alpha must lie in (1,2), got " + std::to_string(alpha));
    require(kernel.steps() == mesh.N, ErrorKind::LengthMismatch,
            "kernel and mesh have different step counts");
    require(std::abs(kernel.nu() - alpha / 2.0) <= 1e-14, ErrorKind::InvalidParameter,
            "kernel order nu must equal alpha / 2");
}

// Time stepping of  mass d^nu V + stiffness U = omega_n load,  V = d^nu U,
// for every column of `loads` at once. `on_step(n, U^n, V^n)` sees each step.
template <class OnStep>
void march(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& stiffness,
           const Eigen::MatrixXd& loads, const GradedMesh& mesh, const L1Kernel& kernel,
           double alpha, OnStep&& on_step) {
    const std::size_t N = mesh.N;
    const Eigen::Index dof = mass.rows();
    const Eigen::Index p = loads.cols();

    // Increments W^k - W^{k-1}, k = 1..N, stored as column block k-1.
    Eigen::MatrixXd dU(dof, p * static_cast<Eigen::Index>(N));
    Eigen::MatrixXd dV(dof, p * static_cast<Eigen::Index>(N));
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(dof, p);
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(dof, p);
    Eigen::MatrixXd hist_u(dof, p);
    Eigen::MatrixXd hist_v(dof, p);
    Eigen::MatrixXd rhs(dof, p);

    Eigen::LLT<Eigen::MatrixXd> llt;
    double factored_a0 = std::nan("");

    for (std::size_t n = 1; n <= N; ++n) {
        const auto row = kernel.row(n);
        const double a0 = row[0];

        // d^nu W^n = a0 W^n + hist_w with
        // hist_w = sum_{k<n} A_{n-k} (W^k - W^{k-1}) - a0 W^{n-1}.
        hist_u = -a0 * U;
        hist_v = -a0 * V;
        for (std::size_t k = 1; k < n; ++k) {
            const auto block = static_cast<Eigen::Index>(k - 1) * p;
            hist_u.noalias() += row[n - k] * dU.middleCols(block, p);
            hist_v.noalias() += row[n - k] * dV.middleCols(block, p);
        }

        if (a0 != factored_a0) {
            llt.compute(a0 * a0 * mass + stiffness);
            require(llt.info() == Eigen::Success, ErrorKind::FactorizationFailure,
                    "step matrix is not SPD at step " + std::to_string(n));
            factored_a0 = a0;
        }

        rhs = omega(2.0 - alpha, mesh.t[n]) * loads;
        rhs.noalias() -= mass * (a0 * hist_u + hist_v);
        const auto block = static_cast<Eigen::Index>(n - 1) * p;
        dU.middleCols(block, p) = -U;
        dV.middleCols(block, p) = -V;
        U = llt.solve(rhs);
        V = a0 * U + hist_u;
        dU.middleCols(block, p) += U;
        dV.middleCols(block, p) += V;
        on_step(n, U, V);
    }
}

Trajectory step_coupled(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& stiffness,
                        const Eigen::VectorXd& load, const GradedMesh& mesh,
                        const L1Kernel& kernel, double alpha) {
    const Eigen::Index dof = mass.rows();
    const auto cols = static_cast<Eigen::Index>(mesh.N + 1);

    Trajectory traj;
    traj.times = mesh.t;
    traj.U = Eigen::MatrixXd::Zero(dof, cols);
    traj.V = Eigen::MatrixXd::Zero(dof, cols);
    if (load.isZero(0.0)) {
        return traj;
    }
    march(mass, stiffness, load, mesh, kernel, alpha,
          [&](std::size_t n, const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
              traj.U.col(static_cast<Eigen::Index>(n)) = U.col(0);
              traj.V.col(static_cast<Eigen::Index>(n)) = V.col(0);
          });
    return traj;
}

Eigen::MatrixXd terminal_batch(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& stiffness,
                               const Eigen::MatrixXd& loads, const GradedMesh& mesh,
                               const L1Kernel& kernel, double alpha) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mass.rows(), loads.cols());
    if (loads.cols() == 0) {
        return out;
    }
    march(mass, stiffness, loads, mesh, kernel, alpha,
          [&](std::size_t n, const Eigen::MatrixXd& U, const Eigen::MatrixXd&) {
              if (n == mesh.N) {
                  out = U;
              }
          });
    return out;
}

}  // namespace

Trajectory solve_full(const FemSpace& space, const GradedMesh& mesh, const L1Kernel& kernel,
                      const SourceSpec& src) {
    check_setup(mesh, kernel, src.alpha);
    require(src.profile.space.get() == &space, ErrorKind::SpaceMismatch,
            "source profile belongs to a different space");
    const Eigen::VectorXd load = space.mass() * src.profile.coeffs;
    return step_coupled(space.mass(), space.stiffness(), load, mesh, kernel, src.alpha);
}

ReducedOperator make_reduced_operator(const FemSpace& space, const Eigen::MatrixXd& basis) {
    require(basis.cols() >= 1, ErrorKind::InvalidParameter, "reduced basis needs rank >= 1");
    require(static_cast<std::size_t>(basis.rows()) == space.dof(), ErrorKind::SpaceMismatch,
            "basis vectors do not match the space");
    ReducedOperator op;
    op.basis = basis;
    op.mass = basis.transpose() * space.mass() * basis;
    op.stiffness = basis.transpose() * space.stiffness() * basis;
    // Symmetrise against rounding.
    op.mass = 0.5 * (op.mass + op.mass.transpose()).eval();
    op.stiffness = 0.5 * (op.stiffness + op.stiffness.transpose()).eval();
    op.space = &space;
    return op;
}

Eigen::VectorXd ReducedOperator::reduced_load(const Field& profile) const {
    require(profile.coeffs.size() == basis.rows(), ErrorKind::SpaceMismatch,
            "source profile does not match the basis");
    return basis.transpose() * (space->mass() * profile.coeffs);
}

Trajectory ReducedOperator::lift(const Trajectory& reduced) const {
    require(reduced.U.rows() == basis.cols(), ErrorKind::LengthMismatch,
            "reduced trajectory does not match the basis rank");
    Trajectory out;
    out.times = reduced.times;
    out.U = basis * reduced.U;
    out.V = basis * reduced.V;
    return out;
}

Trajectory solve_reduced(const ReducedOperator& op, const GradedMesh& mesh,
                         const L1Kernel& kernel, const SourceSpec& src) {
    return solve_reduced(op, mesh, kernel, src.alpha, op.reduced_load(src.profile));
}

Trajectory solve_reduced(const ReducedOperator& op, const GradedMesh& mesh,
                         const L1Kernel& kernel, double alpha, const Eigen::VectorXd& load) {
    check_setup(mesh, kernel, alpha);
    require(load.size() == op.basis.cols(), ErrorKind::LengthMismatch,
            "reduced load does not match the basis rank");
    return step_coupled(op.mass, op.stiffness, load, mesh, kernel, alpha);
}

std::vector<double> terminal_trace(const Trajectory& traj, const SpacePtr& space,
                                   std::span<const Point> points) {
    require(traj.steps() >= 1, ErrorKind::EmptyInput, "trajectory has no time steps");
    return eval_at(Field(space, traj.terminal()), points);
}

double mean_square_error(const FemSpace& space, const Trajectory& a, const Trajectory& b) {
    require(a.U.rows() == b.U.rows() && a.U.cols() == b.U.cols(), ErrorKind::LengthMismatch,
            "trajectories differ in shape");
    const std::size_t N = a.steps();
    require(N >= 1, ErrorKind::EmptyInput, "trajectory has no time steps");
    const Eigen::MatrixXd diff = (a.U - b.U).rightCols(static_cast<Eigen::Index>(N));
    const Eigen::MatrixXd mdiff = space.mass() * diff;
    return diff.cwiseProduct(mdiff).sum() / static_cast<double>(N);
}

Eigen::MatrixXd solve_full_terminal(const FemSpace& space, const GradedMesh& mesh,
                                    const L1Kernel& kernel, double alpha,
                                    const Eigen::MatrixXd& profiles) {
    check_setup(mesh, kernel, alpha);
    require(static_cast<std::size_t>(profiles.rows()) == space.dof(), ErrorKind::SpaceMismatch,
            "source profiles do not match the space");
    const Eigen::MatrixXd loads = space.mass() * profiles;
    return terminal_batch(space.mass(), space.stiffness(), loads, mesh, kernel, alpha);
}

Eigen::MatrixXd solve_reduced_terminal(const ReducedOperator& op, const GradedMesh& mesh,
                                       const L1Kernel& kernel, double alpha,
                                       const Eigen::MatrixXd& loads) {
    check_setup(mesh, kernel, alpha);
    require(loads.rows() == op.basis.cols(), ErrorKind::LengthMismatch,
            "reduced loads do not match the basis rank");
    return terminal_batch(op.mass, op.stiffness, loads, mesh, kernel, alpha);
}

double max_abs_difference(const Trajectory& a, const Trajectory& b) {
    require(a.U.rows() == b.U.rows() && a.U.cols() == b.U.cols(), ErrorKind::LengthMismatch,
            "trajectories differ in shape");
    return (a.U - b.U).cwiseAbs().maxCoeff();
}

}  // namespace fracpod
