#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fracpod/point.hpp"

namespace fracpod {

/// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) on z <= 0.
///
/// Supported: 0 < alpha <= 2, beta > 0. The evaluator picks its method
/// from w = |z|^(1/alpha), which controls the size of the largest Taylor
/// term (about e^w):
///   w <= 2        Taylor series in double, compensated summation
///   2 < w < 28    Taylor series in binary128 arithmetic
///   w >= 28       asymptotic expansion: algebraic series truncated at its
///                 smallest term plus the exponentially damped pole terms
double mittag_leffler(double alpha, double beta, double z);

/// Reciprocal Gamma function, exact zero at the poles. Negative arguments
/// go through the reflection formula.
double reciprocal_gamma(double x);

/// u_m(T) = T E_{alpha,2}(-mu T^alpha) a1.
double terminal_mode_value(double alpha, double mu, double T, double a1_coeff);

/// (a_1)_m / q_m = 1 / (T E_{alpha,2}(-mu T^alpha)).
/// Throws DivisionByZero when the Mittag-Leffler value is zero or has
/// changed sign.
double mode_ratio(double alpha, double mu, double T);

enum class SpectralDomain { Interval, UnitSquare };

/// One sine mode. On (0, pi) the eigenfunction is sin(k x) with mu = k^2;
/// on the unit square it is sin(k pi x) sin(l pi y) with
/// mu = (k^2 + l^2) pi^2. `coeff` multiplies the unnormalised eigenfunction.
struct SpectralMode {
    std::array<int, 2> index{1, 0};
    double mu = 0.0;
    double coeff = 0.0;
};

SpectralMode make_mode(SpectralDomain domain, int k, int l, double coeff);

/// Truncated sine-series solution u(x, T) = sum_m u_m(T) phi_m(x).
struct SpectralSolution {
    double alpha = 1.5;
    double T = 0.1;
    SpectralDomain domain = SpectralDomain::Interval;
    std::vector<SpectralMode> modes;

    /// Sine coefficients of `a1` up to truncation level `L` per axis,
    /// computed by composite Gauss quadrature.
    static SpectralSolution from_initial_velocity(double alpha, double T, SpectralDomain domain,
                                                  const std::function<double(Point)>& a1,
                                                  int L);
};

std::vector<double> spectral_terminal_field(const SpectralSolution& sol,
                                            std::span<const Point> points);

/// ||u(T)||_{L2}^2 of the truncated series.
double spectral_l2_norm2(const SpectralSolution& sol);

/// Truncation bound mu_{L+1}^{-2} ||Delta u(T)||^2 for the modes with
/// max(k, l) <= L, evaluated from the modes held in `sol`.
double spectral_tail_bound(const SpectralSolution& sol, int L);

}  // namespace fracpod
