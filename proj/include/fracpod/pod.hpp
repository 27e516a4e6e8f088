#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>

#include "fracpod/fem.hpp"
#include "fracpod/solver.hpp"
#include "fracpod/timegrid.hpp"

namespace fracpod {

/// Relative eigenvalue cut-off that defines the numerical POD rank.
inline constexpr double kPodTolerance = 1e-12;

/// Snapshot ensemble y_1..y_N (columns of `Y`) with the inner product X
/// used for POD.
struct SnapshotSet {
    SpacePtr space;
    Eigen::MatrixXd Y;
    Norm product = Norm::L2;

    [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(Y.cols()); }
};

/// K_ij = (1/N) (y_i, y_j)_X.
Eigen::MatrixXd correlation_matrix(const SnapshotSet& set);

/// Retained eigenpairs of a symmetric matrix, sorted descending.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(values.size()); }
};

/// Cyclic Jacobi eigensolver. Sweeps until every off-diagonal entry is
/// below tol * ||K||_F, then drops eigenvalues below tol * lambda_1.
/// Eigenvectors are signed so their first nonzero component is positive.
SymmetricEigen eigendecompose(const Eigen::MatrixXd& K, double tol = kPodTolerance);

/// POD basis psi_j = Y v_j / sqrt(N lambda_j), X-orthonormal.
struct PodBasis {
    Eigen::MatrixXd psi;     ///< dof x p
    Eigen::VectorXd lambda;  ///< full retained spectrum lambda_1..lambda_r
    Norm product = Norm::L2;

    [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(psi.cols()); }
    [[nodiscard]] std::size_t rank_r() const { return static_cast<std::size_t>(lambda.size()); }
    /// sum_{j > m} lambda_j.
    [[nodiscard]] double tail(std::size_t m) const;
};

PodBasis build_basis(const SnapshotSet& set, const SymmetricEigen& eig, std::size_t p);

/// Convenience: correlation matrix, eigendecomposition and basis of rank
/// min(p, r).
PodBasis train_basis(const SnapshotSet& set, std::size_t p);

/// (1/N) sum_n ||y_n - sum_{j<=m} (y_n, psi_j)_X psi_j||_X^2 computed
/// directly from the snapshots.
double projection_error(const SnapshotSet& set, const PodBasis& basis, std::size_t m);

/// Snapshots {U^n}, n = 1..N, or with `include_quotients` also the L1
/// quotients {d^nu U^n} and {d^nu V^n}.
SnapshotSet collect_snapshots(const Trajectory& traj, const L1Kernel& kernel,
                              bool include_quotients, SpacePtr space, Norm product = Norm::L2);

/// Basis CSV: one basis vector per row.
void write_basis_csv(const std::filesystem::path& path, const Eigen::MatrixXd& psi);
Eigen::MatrixXd read_basis_csv(const std::filesystem::path& path);

}  // namespace fracpod
