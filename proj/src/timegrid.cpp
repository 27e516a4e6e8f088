#include "fracpod/timegrid.hpp"

#include <cmath>
#include <string>

#include "fracpod/error.hpp"

namespace fracpod {

GradedMesh build_graded_mesh(double T, std::size_t N, double r) {
    require(N >= 1, ErrorKind::InvalidParameter, "graded mesh needs N >= 1");
    require(std::isfinite(T) && T > 0.0, ErrorKind::InvalidParameter, "graded mesh needs T > 0");
    require(std::isfinite(r) && r >= 1.0, ErrorKind::InvalidParameter,
            "graded mesh needs grading exponent r >= 1");
    require(r <= kMaxGrading, ErrorKind::InvalidParameter,
            "grading exponent r = " + std::to_string(r) + " exceeds the cap of 20");

    GradedMesh mesh;
    mesh.T = T;
    mesh.N = N;
    mesh.r = r;
    mesh.t.resize(N + 1);
    mesh.t[0] = 0.0;
    for (std::size_t n = 1; n < N; ++n) {
        mesh.t[n] = T * std::pow(static_cast<double>(n) / static_cast<double>(N), r);
    }
    mesh.t[N] = T;

    mesh.tau.resize(N);
    for (std::size_t n = 1; n <= N; ++n) {
        mesh.tau[n - 1] = mesh.t[n] - mesh.t[n - 1];
        require(mesh.tau[n - 1] > 0.0, ErrorKind::InvalidParameter,
                "graded mesh is not strictly increasing at step " + std::to_string(n));
    }
    return mesh;
}

double optimal_grading(double nu) {
    require(nu > 0.0 && nu < 1.0, ErrorKind::InvalidParameter, "nu must lie in (0,1)");
    return (2.0 - nu) / (1.0 - nu);
}

double omega(double beta, double t) {
    return std::pow(t, beta - 1.0) / std::tgamma(beta);
}

namespace {

// (b + tau)^p - b^p for b >= 0, tau > 0 and 0 < p < 1, without the
// cancellation of the naive difference when tau << b.
double power_increment(double b, double tau, double p) {
    if (b == 0.0) {
        return std::pow(tau, p);
    }
    return std::pow(b, p) * std::expm1(p * std::log1p(tau / b));
}

}  // namespace

L1Kernel::L1Kernel(const GradedMesh& mesh, double nu) : nu_(nu), steps_(mesh.N) {
    require(nu > 0.0 && nu < 1.0, ErrorKind::InvalidParameter,
            "L1 kernel order nu must lie in (0,1), got " + std::to_string(nu));
    const double p = 1.0 - nu;
    const double scale = 1.0 / std::tgamma(2.0 - nu);
    data_.resize(steps_ * (steps_ + 1) / 2);
    for (std::size_t n = 1; n <= steps_; ++n) {
        double* row_n = data_.data() + offset(n);
        for (std::size_t k = 1; k <= n; ++k) {
            const double tau_k = mesh.step(k);
            const double b = mesh.t[n] - mesh.t[k];
            row_n[n - k] = power_increment(b, tau_k, p) * scale / tau_k;
        }
    }
}

L1Kernel l1_coefficients(const GradedMesh& mesh, double nu) { return L1Kernel(mesh, nu); }

double apply_l1(const L1Kernel& kernel, std::span<const double> history) {
    require(history.size() >= 2, ErrorKind::LengthMismatch,
            "L1 history needs at least two values v^0, v^1");
    const std::size_t n = history.size() - 1;
    require(n <= kernel.steps(), ErrorKind::LengthMismatch,
            "L1 history of length " + std::to_string(history.size()) +
                " exceeds the kernel's " + std::to_string(kernel.steps()) + " steps");
    const auto row = kernel.row(n);
    double sum = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        sum += row[n - k] * (history[k] - history[k - 1]);
    }
    return sum;
}

ComplementaryKernel::ComplementaryKernel(const L1Kernel& kernel) : steps_(kernel.steps()) {
    data_.resize(steps_ * (steps_ + 1) / 2);
    for (std::size_t n = 1; n <= steps_; ++n) {
        double* p = data_.data() + n * (n - 1) / 2;
        p[0] = 1.0 / kernel.coeff(n, 0);
        for (std::size_t k = n - 1; k >= 1; --k) {
            double s = 0.0;
            for (std::size_t j = k + 1; j <= n; ++j) {
                s += p[n - j] * kernel.coeff(j, j - k);
            }
            p[n - k] = (1.0 - s) / kernel.coeff(k, 0);
        }
    }
}

ComplementaryKernel complementary_kernel(const L1Kernel& kernel) {
    return ComplementaryKernel(kernel);
}

ModeSolution mode_block_solve(const L1Kernel& kernel, double mu, double source_coeff,
                              const GradedMesh& mesh, double alpha) {
    require(mu >= 0.0, ErrorKind::InvalidParameter, "mode eigenvalue must be nonnegative");
    require(kernel.steps() == mesh.N, ErrorKind::LengthMismatch,
            "kernel and mesh have different step counts");
    require(std::abs(alpha - 2.0 * kernel.nu()) <= 1e-14, ErrorKind::InvalidParameter,
            "mode_block_solve requires alpha = 2 nu");

    const std::size_t N = mesh.N;

    // Lower-triangular L1 matrix acting on (v^1..v^N) with v^0 = 0.
    std::vector<double> L(N * N, 0.0);
    for (std::size_t n = 1; n <= N; ++n) {
        const auto row = kernel.row(n);
        double* Ln = L.data() + (n - 1) * N;
        Ln[n - 1] = row[0];
        for (std::size_t k = 1; k < n; ++k) {
            Ln[k - 1] = row[n - k] - row[n - k - 1];
        }
    }

    ModeSolution out;
    out.V.assign(N, 0.0);
    out.U.assign(N, 0.0);
    for (std::size_t n = 1; n <= N; ++n) {
        const double* Ln = L.data() + (n - 1) * N;
        double hist_v = 0.0;
        double hist_u = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            hist_v += Ln[k - 1] * out.V[k - 1];
            hist_u += Ln[k - 1] * out.U[k - 1];
        }
        const double a = Ln[n - 1];
        const double r1 = source_coeff * omega(2.0 - alpha, mesh.t[n]) - hist_v;
        const double r2 = hist_u;
        // 2x2 diagonal block [[a, mu], [1, -a]] has determinant -(a^2 + mu).
        const double det = a * a + mu;
        require(det > 0.0 && std::isfinite(det), ErrorKind::SingularSystem,
                "singular diagonal block at step " + std::to_string(n));
        const double u = (r1 - a * r2) / det;
        out.U[n - 1] = u;
        out.V[n - 1] = r2 + a * u;
    }
    return out;
}

}  // namespace fracpod
