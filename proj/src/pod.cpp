#include "fracpod/pod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fracpod/csv.hpp"
#include "fracpod/error.hpp"

namespace fracpod {

Eigen::MatrixXd correlation_matrix(const SnapshotSet& set) {
    require(set.space != nullptr, ErrorKind::InvalidParameter, "snapshot set has no space");
    require(set.count() >= 1, ErrorKind::EmptyInput, "snapshot set is empty");
    require(static_cast<std::size_t>(set.Y.rows()) == set.space->dof(), ErrorKind::SpaceMismatch,
            "snapshots do not match the space");
    const Eigen::MatrixXd XY = gram_matrix(*set.space, set.product) * set.Y;
    Eigen::MatrixXd K = set.Y.transpose() * XY;
    K /= static_cast<double>(set.count());
    return 0.5 * (K + K.transpose());
}

namespace {

// One Jacobi rotation zeroing A(p, q); accumulates into V.
void rotate(Eigen::MatrixXd& A, Eigen::MatrixXd& V, Eigen::Index p, Eigen::Index q) {
    const double apq = A(p, q);
    const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const double tau = s / (1.0 + c);

    A(p, p) -= t * apq;
    A(q, q) += t * apq;
    A(p, q) = 0.0;
    A(q, p) = 0.0;
    const Eigen::Index n = A.rows();
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r == p || r == q) {
            continue;
        }
        const double arp = A(r, p);
        const double arq = A(r, q);
        A(r, p) = arp - s * (arq + tau * arp);
        A(r, q) = arq + s * (arp - tau * arq);
        A(p, r) = A(r, p);
        A(q, r) = A(r, q);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const double vrp = V(r, p);
        const double vrq = V(r, q);
        V(r, p) = vrp - s * (vrq + tau * vrp);
        V(r, q) = vrq + s * (vrp - tau * vrq);
    }
}

}  // namespace

SymmetricEigen eigendecompose(const Eigen::MatrixXd& K, double tol) {
    require(K.rows() == K.cols(), ErrorKind::NonSymmetric, "matrix is not square");
    require(K.rows() >= 1, ErrorKind::EmptyInput, "matrix is empty");
    require(tol > 0.0 && tol < 1.0, ErrorKind::InvalidParameter, "tolerance must lie in (0,1)");
    const double norm = K.norm();
    require(std::isfinite(norm), ErrorKind::InvalidParameter, "matrix has non-finite entries");
    require((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(norm, 1e-300),
            ErrorKind::NonSymmetric, "matrix is not symmetric");

    const Eigen::Index n = K.rows();
    Eigen::MatrixXd A = K;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
    const double stop = tol * norm;
    const double skip = 1e-2 * stop;
    constexpr int kMaxSweeps = 100;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index q = 1; q < n; ++q) {
            for (Eigen::Index p = 0; p < q; ++p) {
                off = std::max(off, std::abs(A(p, q)));
            }
        }
        if (off < stop || norm == 0.0) {
            break;
        }
        require(sweep + 1 < kMaxSweeps, ErrorKind::FactorizationFailure,
                "Jacobi iteration did not converge");
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) > skip) {
                    rotate(A, V, p, q);
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return A(a, a) > A(b, b); });

    const double lead = A(order[0], order[0]);
    std::size_t keep = 0;
    if (lead > 0.0) {
        while (keep < order.size() && A(order[keep], order[keep]) >= tol * lead) {
            ++keep;
        }
    }

    SymmetricEigen out;
    out.values.resize(static_cast<Eigen::Index>(keep));
    out.vectors.resize(n, static_cast<Eigen::Index>(keep));
    for (std::size_t j = 0; j < keep; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        out.values[col] = A(order[j], order[j]);
        Eigen::VectorXd v = V.col(order[j]);
        v.normalize();
        const double thresh = 1e-8 * v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v[i]) > thresh) {
                if (v[i] < 0.0) {
                    v = -v;
                }
                break;
            }
        }
        out.vectors.col(col) = v;
    }
    return out;
}

double PodBasis::tail(std::size_t m) const {
    double s = 0.0;
    for (auto j = static_cast<Eigen::Index>(m); j < lambda.size(); ++j) {
        s += lambda[j];
    }
    return s;
}

PodBasis build_basis(const SnapshotSet& set, const SymmetricEigen& eig, std::size_t p) {
    require(p >= 1, ErrorKind::InvalidParameter, "POD rank must be at least 1");
    require(p <= eig.rank(), ErrorKind::RankExceeded,
            "requested POD rank " + std::to_string(p) + " exceeds numerical rank " +
                std::to_string(eig.rank()));
    require(static_cast<std::size_t>(eig.vectors.rows()) == set.count(),
            ErrorKind::LengthMismatch, "eigenvectors do not match the snapshot count");

    const double N = static_cast<double>(set.count());
    const auto cols = static_cast<Eigen::Index>(p);
    PodBasis basis;
    basis.product = set.product;
    basis.lambda = eig.values;
    basis.psi = set.Y * eig.vectors.leftCols(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        basis.psi.col(j) /= std::sqrt(N * eig.values[j]);
    }

    // Two Gram-Schmidt passes in the X product remove the orthogonality
    // loss of the trailing modes.
    const Eigen::MatrixXd X = gram_matrix(*set.space, set.product);
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            Eigen::VectorXd v = basis.psi.col(j);
            for (Eigen::Index i = 0; i < j; ++i) {
                const Eigen::VectorXd& u = basis.psi.col(i);
                v -= u.dot(X * v) * u;
            }
            v /= std::sqrt(v.dot(X * v));
            basis.psi.col(j) = v;
        }
    }
    return basis;
}

PodBasis train_basis(const SnapshotSet& set, std::size_t p) {
    const SymmetricEigen eig = eigendecompose(correlation_matrix(set));
    require(eig.rank() >= 1, ErrorKind::EmptyInput, "snapshots are identically zero");
    return build_basis(set, eig, std::min(p, eig.rank()));
}

double projection_error(const SnapshotSet& set, const PodBasis& basis, std::size_t m) {
    require(m <= basis.rank(), ErrorKind::RankExceeded, "projection rank exceeds basis rank");
    require(set.count() >= 1, ErrorKind::EmptyInput, "snapshot set is empty");
    const Eigen::MatrixXd X = gram_matrix(*set.space, set.product);
    const auto cols = static_cast<Eigen::Index>(m);
    const Eigen::MatrixXd& psi = basis.psi;
    Eigen::MatrixXd R = set.Y;
    if (m > 0) {
        const Eigen::MatrixXd coeffs = psi.leftCols(cols).transpose() * (X * set.Y);
        R.noalias() -= psi.leftCols(cols) * coeffs;
    }
    return R.cwiseProduct(X * R).sum() / static_cast<double>(set.count());
}

SnapshotSet collect_snapshots(const Trajectory& traj, const L1Kernel& kernel,
                              bool include_quotients, SpacePtr space, Norm product) {
    const std::size_t N = traj.steps();
    require(N >= 1, ErrorKind::EmptyInput, "trajectory has no time steps");
    require(kernel.steps() == N, ErrorKind::LengthMismatch,
            "kernel and trajectory have different step counts");
    require(space != nullptr && static_cast<std::size_t>(traj.U.rows()) == space->dof(),
            ErrorKind::SpaceMismatch, "trajectory does not match the space");

    const auto n_steps = static_cast<Eigen::Index>(N);
    SnapshotSet set;
    set.space = std::move(space);
    set.product = product;
    if (!include_quotients) {
        set.Y = traj.U.rightCols(n_steps);
        return set;
    }

    const Eigen::Index dof = traj.U.rows();
    set.Y.resize(dof, 3 * n_steps);
    set.Y.leftCols(n_steps) = traj.U.rightCols(n_steps);
    // V^n is the L1 quotient of U^n.
    set.Y.middleCols(n_steps, n_steps) = traj.V.rightCols(n_steps);
    for (std::size_t n = 1; n <= N; ++n) {
        const auto row = kernel.row(n);
        Eigen::VectorXd q = Eigen::VectorXd::Zero(dof);
        for (std::size_t k = 1; k <= n; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            q += row[n - k] * (traj.V.col(kk) - traj.V.col(kk - 1));
        }
        set.Y.col(2 * n_steps + static_cast<Eigen::Index>(n - 1)) = q;
    }
    return set;
}

void write_basis_csv(const std::filesystem::path& path, const Eigen::MatrixXd& psi) {
    std::vector<csv::Row> rows(static_cast<std::size_t>(psi.cols()));
    for (Eigen::Index j = 0; j < psi.cols(); ++j) {
        rows[static_cast<std::size_t>(j)].assign(psi.col(j).data(),
                                                 psi.col(j).data() + psi.rows());
    }
    csv::write(path, {}, rows);
}

Eigen::MatrixXd read_basis_csv(const std::filesystem::path& path) {
    const auto rows = csv::read(path);
    require(!rows.empty(), ErrorKind::EmptyInput, "basis file " + path.string() + " is empty");
    const std::size_t dof = rows.front().size();
    Eigen::MatrixXd psi(static_cast<Eigen::Index>(dof), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        require(rows[j].size() == dof, ErrorKind::LengthMismatch,
                "basis rows have different lengths");
        for (std::size_t i = 0; i < dof; ++i) {
            psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
        }
    }
    return psi;
}

}  // namespace fracpod
