#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fracpod/fem.hpp"
#include "fracpod/point.hpp"

namespace fracpod {

/// Scattered terminal measurements q(x_i) = u(x_i, T) + sigma * eps_i.
struct ScatteredObservations {
    std::vector<Point> points;
    std::vector<double> values;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Equispaced points offset by half a spacing from the boundary. In 2D
/// `n` must be a perfect square and the points form a tensor grid.
std::vector<Point> quasi_uniform_points(const DomainSpec& domain, std::size_t n);

/// Adds sigma-scaled standard normal draws (mt19937_64 seeded with `seed`).
ScatteredObservations add_noise(std::vector<Point> points, std::span<const double> clean,
                                double sigma, std::uint64_t seed);

/// Matern kernel of smoothness 5/2.
double matern52(double distance, double length_scale);

/// Kernel smoother with penalty matrix A = K^{-1}, K_ij = k(x_i, x_j).
class Mollifier {
public:
    Mollifier(std::vector<Point> points, double length_scale);

    /// Length scale = domain extent / 4.
    static Mollifier for_domain(const DomainSpec& domain, std::vector<Point> points);

    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] const std::vector<Point>& points() const { return points_; }
    [[nodiscard]] double length_scale() const { return ell_; }
    [[nodiscard]] const Eigen::MatrixXd& gram() const { return gram_; }
    /// Diagonal shift applied to K; zero unless the plain factorization failed.
    [[nodiscard]] double jitter() const { return jitter_; }
    /// A = K^{-1}, formed explicitly.
    [[nodiscard]] Eigen::MatrixXd penalty() const;

    [[nodiscard]] double kernel(Point a, Point b) const;

    /// K^{-1} v.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& v) const;
    /// v^T A v.
    [[nodiscard]] double a_norm2(const Eigen::VectorXd& v) const;

private:
    std::vector<Point> points_;
    double ell_;
    double jitter_ = 0.0;
    Eigen::MatrixXd gram_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Minimizer of (1/m) sum |q^r_i - q_i|^2 + lambda q^r A q^r^T, i.e.
/// q* = K (K + m lambda I)^{-1} q.
Eigen::VectorXd smooth(const ScatteredObservations& obs, const Mollifier& mol, double lambda);

/// (1/m) sum |candidate_i - q_i|^2.
double data_misfit(const ScatteredObservations& obs, const Eigen::VectorXd& candidate);

/// Objective value of the smoothing problem at `candidate`.
double smoothing_objective(const ScatteredObservations& obs, const Mollifier& mol,
                           const Eigen::VectorXd& candidate, double lambda);

/// Default exponent a of the lambda rule.
inline constexpr double kDefaultDecay = 1.5;

/// Fixed-point rule lambda = (sigma^2 / (m ||q*||_A^2))^{a / (a + 1)},
/// started from the raw data and updated `iterations` times.
double lambda_rule(const ScatteredObservations& obs, const Mollifier& mol,
                   double decay = kDefaultDecay, int iterations = 2);

/// Kernel interpolant of `smoothed` sampled at the nodes of `space`.
Field extend_to_field(const Mollifier& mol, const Eigen::VectorXd& smoothed, SpacePtr space);

/// Observation CSV: columns x[,y],value.
void write_observations_csv(const std::filesystem::path& path, const ScatteredObservations& obs,
                            int dim);
ScatteredObservations read_observations_csv(const std::filesystem::path& path, int dim);

}  // namespace fracpod
