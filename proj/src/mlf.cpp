#include "fracpod/mlf.hpp"

#include <quadmath.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "fracpod/error.hpp"

namespace fracpod {

namespace {

constexpr double kDoubleTaylorMaxW = 2.0;
constexpr double kAsymptoticMinW = 28.0;
constexpr int kMaxTerms = 10000;

// sin(pi x) with exact zeros at integers.
double sin_pi(double x) {
    const double r = std::fmod(x, 2.0);  // exact
    if (r == std::trunc(r)) {
        return 0.0;
    }
    return std::sin(std::numbers::pi * r);
}

double taylor_double(double alpha, double beta, double z) {
    // Neumaier summation.
    double sum = 0.0;
    double comp = 0.0;
    double zk = 1.0;
    for (int k = 0; k < kMaxTerms; ++k) {
        const double term = zk * reciprocal_gamma(alpha * k + beta);
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        const bool past_peak = alpha * k > std::abs(z) + 2.0;
        if (past_peak && std::abs(term) <= 1e-18 * std::abs(sum + comp)) {
            break;
        }
        zk *= z;
    }
    return sum + comp;
}

double taylor_quad(double alpha, double beta, double z, double w) {
    const __float128 zq = z;
    const __float128 aq = alpha;
    const __float128 bq = beta;
    __float128 sum = 0;
    __float128 zk = 1;
    for (int k = 0; k < kMaxTerms; ++k) {
        const __float128 term = zk / tgammaq(aq * k + bq);
        sum += term;
        const bool past_peak = alpha * k > w + 2.0;
        if (past_peak && fabsq(term) <= static_cast<__float128>(1e-33) * fabsq(sum)) {
            break;
        }
        zk *= zq;
    }
    return static_cast<double>(sum);
}

double asymptotic(double alpha, double beta, double z, double w) {
    // Algebraic part -sum_k z^{-k} / Gamma(beta - alpha k), cut where the
    // envelope |z|^{-k} |Gamma(1 - beta + alpha k)| / pi of the terms is
    // smallest. Individual terms can be tiny near poles of Gamma, so they
    // do not decide the cut.
    double algebraic = 0.0;
    double smallest = std::numeric_limits<double>::infinity();
    double zinv_k = 1.0;
    for (int k = 1; k < 400; ++k) {
        zinv_k /= z;
        const double x = beta - alpha * k;
        const double envelope =
            std::abs(zinv_k) * (x >= 0.5 ? 1.0 / std::tgamma(x) : std::tgamma(1.0 - x) / std::numbers::pi);
        if (envelope > smallest) {
            break;
        }
        smallest = envelope;
        algebraic += -zinv_k * reciprocal_gamma(x);
        if (smallest <= 1e-18 * std::abs(algebraic)) {
            break;
        }
    }

    // Residues at the poles zeta^alpha = z on the principal sheet:
    // arg zeta = (pi + 2 pi j) / alpha in (-pi, pi].
    double poles = 0.0;
    if (alpha > 1.0) {
        const std::complex<double> zeta = std::polar(w, std::numbers::pi / alpha);
        const std::complex<double> term = std::pow(zeta, 1.0 - beta) * std::exp(zeta);
        poles = 2.0 / alpha * term.real();
    } else if (alpha == 1.0) {
        // Pole on the branch cut; average of both sides.
        poles = std::pow(w, 1.0 - beta) * std::cos(std::numbers::pi * (1.0 - beta)) *
                std::exp(-w);
    }
    return algebraic + poles;
}

}  // namespace

double reciprocal_gamma(double x) {
    if (x >= 0.5) {
        return 1.0 / std::tgamma(x);
    }
    // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
    const double s = sin_pi(x);
    if (s == 0.0) {
        return 0.0;
    }
    return s * std::tgamma(1.0 - x) / std::numbers::pi;
}

double mittag_leffler(double alpha, double beta, double z) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 2.0, ErrorKind::DomainError,
            "Mittag-Leffler order alpha must lie in (0,2], got " + std::to_string(alpha));
    require(std::isfinite(beta) && beta > 0.0, ErrorKind::DomainError,
            "Mittag-Leffler order beta must be positive, got " + std::to_string(beta));
    require(std::isfinite(z) && z <= 0.0, ErrorKind::DomainError,
            "Mittag-Leffler argument must be finite and nonpositive, got " + std::to_string(z));
    if (z == 0.0) {
        return reciprocal_gamma(beta);
    }
    const double w = std::pow(-z, 1.0 / alpha);
    if (w <= kDoubleTaylorMaxW) {
        return taylor_double(alpha, beta, z);
    }
    if (w < kAsymptoticMinW) {
        return taylor_quad(alpha, beta, z, w);
    }
    return asymptotic(alpha, beta, z, w);
}

double terminal_mode_value(double alpha, double mu, double T, double a1_coeff) {
    require(mu >= 0.0, ErrorKind::InvalidParameter, "mode eigenvalue must be nonnegative");
    require(T > 0.0, ErrorKind::InvalidParameter, "terminal time must be positive");
    return T * mittag_leffler(alpha, 2.0, -mu * std::pow(T, alpha)) * a1_coeff;
}

double mode_ratio(double alpha, double mu, double T) {
    require(mu >= 0.0, ErrorKind::InvalidParameter, "mode eigenvalue must be nonnegative");
    require(T > 0.0, ErrorKind::InvalidParameter, "terminal time must be positive");
    const double e = mittag_leffler(alpha, 2.0, -mu * std::pow(T, alpha));
    require(e > 0.0, ErrorKind::DivisionByZero,
            "E_{alpha,2}(-mu T^alpha) = " + std::to_string(e) + " at mu = " + std::to_string(mu) +
                " is not positive; the mode ratio is undefined");
    return 1.0 / (T * e);
}

SpectralMode make_mode(SpectralDomain domain, int k, int l, double coeff) {
    SpectralMode m;
    m.coeff = coeff;
    if (domain == SpectralDomain::Interval) {
        require(k >= 1, ErrorKind::InvalidParameter, "sine mode index must be >= 1");
        m.index = {k, 0};
        m.mu = static_cast<double>(k) * k;
    } else {
        require(k >= 1 && l >= 1, ErrorKind::InvalidParameter, "sine mode indices must be >= 1");
        m.index = {k, l};
        m.mu = (static_cast<double>(k) * k + static_cast<double>(l) * l) * std::numbers::pi *
               std::numbers::pi;
    }
    return m;
}

namespace {

// 3-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 3> kGaussX = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr std::array<double, 3> kGaussW = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

double eigenfunction(SpectralDomain domain, const SpectralMode& m, Point p) {
    if (domain == SpectralDomain::Interval) {
        return std::sin(m.index[0] * p.x);
    }
    return std::sin(m.index[0] * std::numbers::pi * p.x) *
           std::sin(m.index[1] * std::numbers::pi * p.y);
}

}  // namespace

SpectralSolution SpectralSolution::from_initial_velocity(double alpha, double T,
                                                         SpectralDomain domain,
                                                         const std::function<double(Point)>& a1,
                                                         int L) {
    require(L >= 1, ErrorKind::InvalidParameter, "truncation level must be >= 1");
    SpectralSolution sol;
    sol.alpha = alpha;
    sol.T = T;
    sol.domain = domain;

    if (domain == SpectralDomain::Interval) {
        constexpr int panels = 4096;
        const double h = std::numbers::pi / panels;
        std::vector<double> xs;
        std::vector<double> fw;
        xs.reserve(panels * 3);
        fw.reserve(panels * 3);
        for (int c = 0; c < panels; ++c) {
            for (int g = 0; g < 3; ++g) {
                const double x = (c + kGaussX[g]) * h;
                xs.push_back(x);
                fw.push_back(a1({x, 0.0}) * kGaussW[g] * h);
            }
        }
        for (int k = 1; k <= L; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                s += fw[i] * std::sin(k * xs[i]);
            }
            sol.modes.push_back(make_mode(domain, k, 0, 2.0 / std::numbers::pi * s));
        }
    } else {
        constexpr int panels = 96;
        const double h = 1.0 / panels;
        std::vector<Point> ps;
        std::vector<double> fw;
        for (int cx = 0; cx < panels; ++cx) {
            for (int gx = 0; gx < 3; ++gx) {
                for (int cy = 0; cy < panels; ++cy) {
                    for (int gy = 0; gy < 3; ++gy) {
                        const Point p{(cx + kGaussX[gx]) * h, (cy + kGaussX[gy]) * h};
                        ps.push_back(p);
                        fw.push_back(a1(p) * kGaussW[gx] * kGaussW[gy] * h * h);
                    }
                }
            }
        }
        for (int k = 1; k <= L; ++k) {
            for (int l = 1; l <= L; ++l) {
                const SpectralMode probe = make_mode(domain, k, l, 1.0);
                double s = 0.0;
                for (std::size_t i = 0; i < ps.size(); ++i) {
                    s += fw[i] * eigenfunction(domain, probe, ps[i]);
                }
                sol.modes.push_back(make_mode(domain, k, l, 4.0 * s));
            }
        }
    }
    return sol;
}

std::vector<double> spectral_terminal_field(const SpectralSolution& sol,
                                            std::span<const Point> points) {
    std::vector<double> out(points.size(), 0.0);
    for (const auto& m : sol.modes) {
        if (m.coeff == 0.0) {
            continue;
        }
        const double um = terminal_mode_value(sol.alpha, m.mu, sol.T, m.coeff);
        for (std::size_t i = 0; i < points.size(); ++i) {
            out[i] += um * eigenfunction(sol.domain, m, points[i]);
        }
    }
    return out;
}

namespace {

double eigenfunction_norm2(SpectralDomain domain) {
    return domain == SpectralDomain::Interval ? std::numbers::pi / 2.0 : 0.25;
}

}  // namespace

double spectral_l2_norm2(const SpectralSolution& sol) {
    double s = 0.0;
    for (const auto& m : sol.modes) {
        const double um = terminal_mode_value(sol.alpha, m.mu, sol.T, m.coeff);
        s += um * um;
    }
    return s * eigenfunction_norm2(sol.domain);
}

double spectral_tail_bound(const SpectralSolution& sol, int L) {
    require(L >= 1, ErrorKind::InvalidParameter, "truncation level must be >= 1");
    double laplacian2 = 0.0;
    for (const auto& m : sol.modes) {
        const double um = terminal_mode_value(sol.alpha, m.mu, sol.T, m.coeff);
        laplacian2 += m.mu * m.mu * um * um;
    }
    laplacian2 *= eigenfunction_norm2(sol.domain);
    const double next = static_cast<double>(L + 1);
    const double mu_next = sol.domain == SpectralDomain::Interval
                               ? next * next
                               : (next * next + 1.0) * std::numbers::pi * std::numbers::pi;
    return laplacian2 / (mu_next * mu_next);
}

}  // namespace fracpod
