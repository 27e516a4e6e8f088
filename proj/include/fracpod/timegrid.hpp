#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracpod {

/// Graded time mesh t_n = T (n/N)^r on [0, T].
///
/// Grading clusters nodes near t = 0 where solutions of the fractional
/// wave problem carry a weak singularity. `t` has N+1 entries and `tau`
/// has N entries with tau[n-1] = t_n - t_{n-1}.
struct GradedMesh {
    double T = 0.0;
    std::size_t N = 0;
    double r = 1.0;
    std::vector<double> t;
    std::vector<double> tau;

    /// Step size tau_n for 1 <= n <= N.
    [[nodiscard]] double step(std::size_t n) const { return tau[n - 1]; }
};

/// Largest accepted grading exponent. For N = 400 and larger r the first
/// node t_1 underflows double precision.
inline constexpr double kMaxGrading = 20.0;

GradedMesh build_graded_mesh(double T, std::size_t N, double r);

/// Grading exponent (2 - nu) / (1 - nu) used by the reference experiments.
double optimal_grading(double nu);

/// omega_beta(t) = t^(beta-1) / Gamma(beta).
double omega(double beta, double t);

/// L1 discretisation coefficients of the Caputo derivative of order nu.
///
/// Row n (1 <= n <= N) holds A^{(n)}_{lag} for lag = n - k, k = 1..n, so
/// that the discrete derivative at t_n is
///   sum_{k=1}^n A^{(n)}_{n-k} (v^k - v^{k-1}).
/// Coefficients come from the exact antiderivative of omega_{1-nu}.
class L1Kernel {
public:
    L1Kernel(const GradedMesh& mesh, double nu);

    [[nodiscard]] double nu() const noexcept { return nu_; }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }

    /// A^{(n)}_{lag}, 0 <= lag < n.
    [[nodiscard]] double coeff(std::size_t n, std::size_t lag) const {
        return data_[offset(n) + lag];
    }

    /// Row n as a span indexed by lag.
    [[nodiscard]] std::span<const double> row(std::size_t n) const {
        return {data_.data() + offset(n), n};
    }

private:
    static std::size_t offset(std::size_t n) noexcept { return n * (n - 1) / 2; }

    double nu_;
    std::size_t steps_;
    std::vector<double> data_;
};

L1Kernel l1_coefficients(const GradedMesh& mesh, double nu);

/// Applies row n of the kernel to v^0..v^n, where n = history.size() - 1.
double apply_l1(const L1Kernel& kernel, std::span<const double> history);

/// Discrete complementary kernel P^{(n)}_{n-j} of the L1 convolution.
class ComplementaryKernel {
public:
    explicit ComplementaryKernel(const L1Kernel& kernel);

    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }

    /// P^{(n)}_{lag}, lag = n - j for 1 <= j <= n.
    [[nodiscard]] double coeff(std::size_t n, std::size_t lag) const {
        return data_[n * (n - 1) / 2 + lag];
    }

    [[nodiscard]] std::span<const double> row(std::size_t n) const {
        return {data_.data() + n * (n - 1) / 2, n};
    }

private:
    std::size_t steps_;
    std::vector<double> data_;
};

ComplementaryKernel complementary_kernel(const L1Kernel& kernel);

/// Time series (n = 1..N) of one spectral mode of the coupled system.
struct ModeSolution {
    std::vector<double> V;
    std::vector<double> U;
};

/// Solves the 2N x 2N per-mode block system
///   [ A   mu I ] [V]   = c [omega]
///   [ I    -A  ] [U]       [  0  ]
/// where A is the lower-triangular L1 matrix of the mesh and
/// omega_n = omega_{2-alpha}(t_n). Requires alpha = 2 nu.
ModeSolution mode_block_solve(const L1Kernel& kernel, double mu, double source_coeff,
                              const GradedMesh& mesh, double alpha);

}  // namespace fracpod
