#include "fracpod/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fracpod/csv.hpp"
#include "fracpod/error.hpp"

namespace fracpod {

std::vector<Point> quasi_uniform_points(const DomainSpec& domain, std::size_t n) {
    require(n >= 2, ErrorKind::InvalidParameter, "need at least 2 observation points");
    std::vector<Point> pts;
    if (domain.dim() == 1) {
        const double dx = domain.lx / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({(static_cast<double>(i) + 0.5) * dx, 0.0});
        }
        return pts;
    }
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    require(k * k == n, ErrorKind::InvalidParameter,
            "2D observation count must be a perfect square, got " + std::to_string(n));
    const double dx = domain.lx / static_cast<double>(k);
    const double dy = domain.ly / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            pts.push_back({(static_cast<double>(i) + 0.5) * dx, (static_cast<double>(j) + 0.5) * dy});
        }
    }
    return pts;
}

ScatteredObservations add_noise(std::vector<Point> points, std::span<const double> clean,
                                double sigma, std::uint64_t seed) {
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidParameter,
            "noise level must be non-negative");
    require(points.size() == clean.size(), ErrorKind::LengthMismatch,
            "points and values differ in length");
    require(points.size() >= 2, ErrorKind::InvalidParameter, "need at least 2 observations");
    ScatteredObservations obs;
    obs.points = std::move(points);
    obs.values.assign(clean.begin(), clean.end());
    obs.sigma = sigma;
    obs.seed = seed;
    if (sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : obs.values) {
            v += sigma * normal(rng);
        }
    }
    return obs;
}

double matern52(double distance, double length_scale) {
    const double r = std::sqrt(5.0) * distance / length_scale;
    return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

Mollifier::Mollifier(std::vector<Point> points, double length_scale)
    : points_(std::move(points)), ell_(length_scale) {
    require(points_.size() >= 2, ErrorKind::InvalidParameter, "need at least 2 points");
    require(length_scale > 0.0, ErrorKind::InvalidParameter, "length scale must be positive");
    const auto n = static_cast<Eigen::Index>(points_.size());
    gram_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram_(i, j) = kernel(points_[static_cast<std::size_t>(i)],
                                 points_[static_cast<std::size_t>(j)]);
            gram_(j, i) = gram_(i, j);
        }
    }
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success) {
        jitter_ = 1e-10 * gram_.trace() / static_cast<double>(n);
        gram_.diagonal().array() += jitter_;
        llt_.compute(gram_);
        require(llt_.info() == Eigen::Success, ErrorKind::FactorizationFailure,
                "kernel Gram matrix is not positive definite");
    }
}

Mollifier Mollifier::for_domain(const DomainSpec& domain, std::vector<Point> points) {
    const double extent = domain.dim() == 1 ? domain.lx : std::max(domain.lx, domain.ly);
    return Mollifier(std::move(points), extent / 4.0);
}

double Mollifier::kernel(Point a, Point b) const {
    return matern52(std::hypot(a.x - b.x, a.y - b.y), ell_);
}

Eigen::MatrixXd Mollifier::penalty() const {
    return llt_.solve(Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols()));
}

Eigen::VectorXd Mollifier::solve(const Eigen::VectorXd& v) const {
    require(v.size() == gram_.rows(), ErrorKind::LengthMismatch,
            "vector does not match the observation count");
    return llt_.solve(v);
}

double Mollifier::a_norm2(const Eigen::VectorXd& v) const { return v.dot(solve(v)); }

namespace {

Eigen::VectorXd as_vector(const ScatteredObservations& obs) {
    return Eigen::Map<const Eigen::VectorXd>(obs.values.data(),
                                             static_cast<Eigen::Index>(obs.values.size()));
}

void check_match(const ScatteredObservations& obs, const Mollifier& mol) {
    require(obs.values.size() == mol.size() && obs.points.size() == mol.size(),
            ErrorKind::LengthMismatch, "observations do not match the mollifier");
}

}  // namespace

Eigen::VectorXd smooth(const ScatteredObservations& obs, const Mollifier& mol, double lambda) {
    check_match(obs, mol);
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidParameter,
            "smoothing weight must be non-negative");
    const Eigen::VectorXd q = as_vector(obs);
    if (lambda == 0.0) {
        return q;
    }
    const double m = static_cast<double>(mol.size());
    Eigen::MatrixXd shifted = mol.gram();
    shifted.diagonal().array() += m * lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    require(llt.info() == Eigen::Success, ErrorKind::SingularSystem,
            "smoothing system is not positive definite");
    return mol.gram() * llt.solve(q);
}

double data_misfit(const ScatteredObservations& obs, const Eigen::VectorXd& candidate) {
    require(static_cast<std::size_t>(candidate.size()) == obs.values.size(),
            ErrorKind::LengthMismatch, "candidate does not match the observations");
    return (candidate - as_vector(obs)).squaredNorm() / static_cast<double>(candidate.size());
}

double smoothing_objective(const ScatteredObservations& obs, const Mollifier& mol,
                           const Eigen::VectorXd& candidate, double lambda) {
    check_match(obs, mol);
    return data_misfit(obs, candidate) + lambda * mol.a_norm2(candidate);
}

double lambda_rule(const ScatteredObservations& obs, const Mollifier& mol, double decay,
                   int iterations) {
    check_match(obs, mol);
    require(decay > 0.0, ErrorKind::InvalidParameter, "decay exponent must be positive");
    require(iterations >= 0, ErrorKind::InvalidParameter, "iteration count must be >= 0");
    if (obs.sigma == 0.0) {
        return 0.0;
    }
    const double m = static_cast<double>(mol.size());
    const double power = decay / (decay + 1.0);
    const auto update = [&](const Eigen::VectorXd& q) {
        const double norm2 = mol.a_norm2(q);
        require(norm2 > 0.0, ErrorKind::DivisionByZero, "data have zero A-norm");
        return std::pow(obs.sigma * obs.sigma / (m * norm2), power);
    };
    double lambda = update(as_vector(obs));
    for (int it = 0; it < iterations; ++it) {
        lambda = update(smooth(obs, mol, lambda));
    }
    return lambda;
}

Field extend_to_field(const Mollifier& mol, const Eigen::VectorXd& smoothed, SpacePtr space) {
    require(space != nullptr, ErrorKind::InvalidParameter, "no space given");
    const Eigen::VectorXd c = mol.solve(smoothed);
    const auto& nodes = space->nodes();
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < mol.size(); ++i) {
            s += c[static_cast<Eigen::Index>(i)] * mol.kernel(nodes[k], mol.points()[i]);
        }
        coeffs[static_cast<Eigen::Index>(k)] = s;
    }
    // Boundary nodes are not unknowns, so the Dirichlet zero is implicit.
    return Field(std::move(space), std::move(coeffs));
}

void write_observations_csv(const std::filesystem::path& path, const ScatteredObservations& obs,
                            int dim) {
    std::vector<csv::Row> rows;
    rows.reserve(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (dim == 1) {
            rows.push_back({obs.points[i].x, obs.values[i]});
        } else {
            rows.push_back({obs.points[i].x, obs.points[i].y, obs.values[i]});
        }
    }
    csv::write(path, dim == 1 ? std::vector<std::string>{"x", "value"}
                              : std::vector<std::string>{"x", "y", "value"},
               rows);
}

ScatteredObservations read_observations_csv(const std::filesystem::path& path, int dim) {
    require(dim == 1 || dim == 2, ErrorKind::InvalidParameter, "dimension must be 1 or 2");
    const auto rows = csv::read(path);
    ScatteredObservations obs;
    const std::size_t width = dim == 1 ? 2 : 3;
    for (const auto& row : rows) {
        require(row.size() == width, ErrorKind::Io,
                "observation rows need " + std::to_string(width) + " columns");
        obs.points.push_back({row[0], dim == 1 ? 0.0 : row[1]});
        obs.values.push_back(row.back());
    }
    require(obs.size() >= 2, ErrorKind::EmptyInput, "need at least 2 observations");
    return obs;
}

}  // namespace fracpod
