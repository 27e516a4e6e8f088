#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fracpod/point.hpp"

namespace fracpod {

enum class DomainKind { Interval, Rectangle };

/// (0, lx) or (0, lx) x (0, ly).
struct DomainSpec {
    DomainKind kind = DomainKind::Interval;
    double lx = 1.0;
    double ly = 1.0;

    static DomainSpec interval(double length) { return {DomainKind::Interval, length, 0.0}; }
    static DomainSpec rectangle(double lx, double ly) { return {DomainKind::Rectangle, lx, ly}; }

    [[nodiscard]] int dim() const { return kind == DomainKind::Interval ? 1 : 2; }
    [[nodiscard]] bool contains(Point p, double slack = 0.0) const;
};

/// Continuous piecewise-linear (1D) or bilinear (2D, tensor-product)
/// finite elements with homogeneous Dirichlet conditions. Unknowns live on
/// interior nodes only; 2D nodes are ordered x-major, index = i * ny + j.
///
/// Dense storage. 2D matrices are Kronecker compositions of the 1D ones:
///   M = Mx (x) My,   S = Sx (x) My + Mx (x) Sy.
class FemSpace {
public:
    [[nodiscard]] const DomainSpec& domain() const noexcept { return domain_; }
    [[nodiscard]] int dim() const noexcept { return domain_.dim(); }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] std::size_t dof() const noexcept { return nodes_.size(); }
    /// Cell counts per axis.
    [[nodiscard]] std::size_t cells_x() const noexcept { return cells_x_; }
    [[nodiscard]] std::size_t cells_y() const noexcept { return cells_y_; }

    [[nodiscard]] const std::vector<Point>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const Eigen::MatrixXd& mass() const noexcept { return mass_; }
    [[nodiscard]] const Eigen::MatrixXd& stiffness() const noexcept { return stiffness_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& mass_factor() const noexcept {
        return mass_llt_;
    }

    /// 1D factors along each axis; the y factors are empty in 1D.
    [[nodiscard]] const Eigen::MatrixXd& mass_x() const noexcept { return mass_x_; }
    [[nodiscard]] const Eigen::MatrixXd& stiffness_x() const noexcept { return stiffness_x_; }
    [[nodiscard]] const Eigen::MatrixXd& mass_y() const noexcept { return mass_y_; }
    [[nodiscard]] const Eigen::MatrixXd& stiffness_y() const noexcept { return stiffness_y_; }

private:
    friend std::shared_ptr<const FemSpace> build_space(const DomainSpec& domain, double h);
    FemSpace() = default;

    DomainSpec domain_;
    double h_ = 0.0;
    std::size_t cells_x_ = 0;
    std::size_t cells_y_ = 0;
    std::vector<Point> nodes_;
    Eigen::MatrixXd mass_x_, stiffness_x_, mass_y_, stiffness_y_;
    Eigen::MatrixXd mass_, stiffness_;
    Eigen::LLT<Eigen::MatrixXd> mass_llt_;
};

using SpacePtr = std::shared_ptr<const FemSpace>;

SpacePtr build_space(const DomainSpec& domain, double h);

/// Nodal coefficient vector attached to a space.
struct Field {
    SpacePtr space;
    Eigen::VectorXd coeffs;

    Field() = default;
    Field(SpacePtr s, Eigen::VectorXd c);

    static Field zero(SpacePtr s);
};

enum class Norm { L2, H1Semi, H1 };

/// a^T M b, a^T S b or a^T (M + S) b.
double inner(const FemSpace& space, const Field& a, const Field& b, Norm which);

/// Same as `inner` on raw coefficient vectors.
double inner(const FemSpace& space, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
             Norm which);

/// Gram matrix of the chosen inner product: M, S or M + S.
Eigen::MatrixXd gram_matrix(const FemSpace& space, Norm which);

/// Piecewise-linear (bilinear) point evaluation, zero on the boundary.
std::vector<double> eval_at(const Field& field, std::span<const Point> points);

/// Load vector (f, phi_i) by 3-point Gauss quadrature per cell
/// (3 x 3 tensor rule in 2D).
Eigen::VectorXd load_vector(const FemSpace& space, const std::function<double(Point)>& f);

/// L2 projection: solves M c = (f, phi).
Field project_l2(SpacePtr space, const std::function<double(Point)>& f);

/// Nodal interpolant.
Field interpolate(SpacePtr space, const std::function<double(Point)>& f);

/// Root mean square of point values, ||u||_n.
double discrete_n_norm(std::span<const double> values);

}  // namespace fracpod
