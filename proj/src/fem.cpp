#include "fracpod/fem.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fracpod/error.hpp"

namespace fracpod {

namespace {

constexpr std::array<double, 3> kGaussX = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr std::array<double, 3> kGaussW = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

std::size_t cell_count(double extent, double h) {
    require(std::isfinite(h) && h > 0.0, ErrorKind::InvalidParameter, "mesh size must be positive");
    const double ratio = extent / h;
    const double n = std::round(ratio);
    require(std::abs(ratio - n) <= 1e-9 * std::max(1.0, n), ErrorKind::InvalidParameter,
            "mesh size " + std::to_string(h) + " does not divide the extent " +
                std::to_string(extent));
    require(n >= 2.0, ErrorKind::InvalidParameter, "mesh needs at least 2 cells per axis");
    return static_cast<std::size_t>(n);
}

// Interior-node P1 matrices on a uniform 1D mesh.
void assemble_1d(std::size_t cells, double h, Eigen::MatrixXd& mass, Eigen::MatrixXd& stiff) {
    const auto n = static_cast<Eigen::Index>(cells - 1);
    mass = Eigen::MatrixXd::Zero(n, n);
    stiff = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mass(i, i) = 4.0 * h / 6.0;
        stiff(i, i) = 2.0 / h;
        if (i + 1 < n) {
            mass(i, i + 1) = mass(i + 1, i) = h / 6.0;
            stiff(i, i + 1) = stiff(i + 1, i) = -1.0 / h;
        }
    }
}

// Interior index of grid node `i` (0..cells), or -1 on the boundary.
Eigen::Index interior(std::size_t i, std::size_t cells) {
    if (i == 0 || i == cells) {
        return -1;
    }
    return static_cast<Eigen::Index>(i - 1);
}

// Cell index and local coordinate in [0, 1] for a coordinate in [0, extent].
std::pair<std::size_t, double> locate(double x, double extent, std::size_t cells) {
    const double s = std::clamp(x / extent, 0.0, 1.0) * static_cast<double>(cells);
    auto c = static_cast<std::size_t>(std::floor(s));
    c = std::min(c, cells - 1);
    return {c, s - static_cast<double>(c)};
}

}  // namespace

bool DomainSpec::contains(Point p, double slack) const {
    const bool in_x = p.x >= -slack && p.x <= lx + slack;
    if (kind == DomainKind::Interval) {
        return in_x;
    }
    return in_x && p.y >= -slack && p.y <= ly + slack;
}

SpacePtr build_space(const DomainSpec& domain, double h) {
    require(domain.lx > 0.0 && (domain.kind == DomainKind::Interval || domain.ly > 0.0),
            ErrorKind::InvalidParameter, "domain extents must be positive");
    std::shared_ptr<FemSpace> space(new FemSpace());
    space->domain_ = domain;
    space->h_ = h;
    space->cells_x_ = cell_count(domain.lx, h);
    assemble_1d(space->cells_x_, domain.lx / space->cells_x_, space->mass_x_,
                space->stiffness_x_);

    if (domain.kind == DomainKind::Interval) {
        for (std::size_t i = 1; i < space->cells_x_; ++i) {
            space->nodes_.push_back({domain.lx * i / space->cells_x_, 0.0});
        }
        space->mass_ = space->mass_x_;
        space->stiffness_ = space->stiffness_x_;
    } else {
        space->cells_y_ = cell_count(domain.ly, h);
        assemble_1d(space->cells_y_, domain.ly / space->cells_y_, space->mass_y_,
                    space->stiffness_y_);
        for (std::size_t i = 1; i < space->cells_x_; ++i) {
            for (std::size_t j = 1; j < space->cells_y_; ++j) {
                space->nodes_.push_back(
                    {domain.lx * i / space->cells_x_, domain.ly * j / space->cells_y_});
            }
        }
        space->mass_ = Eigen::kroneckerProduct(space->mass_x_, space->mass_y_);
        space->stiffness_ = Eigen::kroneckerProduct(space->stiffness_x_, space->mass_y_) +
                            Eigen::kroneckerProduct(space->mass_x_, space->stiffness_y_);
    }
    space->mass_llt_.compute(space->mass_);
    require(space->mass_llt_.info() == Eigen::Success, ErrorKind::FactorizationFailure,
            "mass matrix is not positive definite");
    return space;
}

Field::Field(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
    require(space != nullptr, ErrorKind::InvalidParameter, "field needs a space");
    require(static_cast<std::size_t>(coeffs.size()) == space->dof(), ErrorKind::LengthMismatch,
            "field has " + std::to_string(coeffs.size()) + " coefficients, space has " +
                std::to_string(space->dof()) + " unknowns");
}

Field Field::zero(SpacePtr s) {
    const auto n = static_cast<Eigen::Index>(s->dof());
    return Field(std::move(s), Eigen::VectorXd::Zero(n));
}

Eigen::MatrixXd gram_matrix(const FemSpace& space, Norm which) {
    switch (which) {
        case Norm::L2:
            return space.mass();
        case Norm::H1Semi:
            return space.stiffness();
        case Norm::H1:
            return space.mass() + space.stiffness();
    }
    return space.mass();
}

double inner(const FemSpace& space, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
             Norm which) {
    require(static_cast<std::size_t>(a.size()) == space.dof() &&
                static_cast<std::size_t>(b.size()) == space.dof(),
            ErrorKind::SpaceMismatch, "coefficient vectors do not match the space");
    switch (which) {
        case Norm::L2:
            return a.dot(space.mass() * b);
        case Norm::H1Semi:
            return a.dot(space.stiffness() * b);
        case Norm::H1:
            return a.dot(space.mass() * b) + a.dot(space.stiffness() * b);
    }
    return 0.0;
}

double inner(const FemSpace& space, const Field& a, const Field& b, Norm which) {
    require(a.space.get() == &space && b.space.get() == &space, ErrorKind::SpaceMismatch,
            "fields belong to a different space");
    return inner(space, a.coeffs, b.coeffs, which);
}

std::vector<double> eval_at(const Field& field, std::span<const Point> points) {
    const FemSpace& space = *field.space;
    const DomainSpec& dom = space.domain();
    const double slack = 1e-12 * std::max(dom.lx, dom.ly);
    std::vector<double> out;
    out.reserve(points.size());
    const auto& c = field.coeffs;
    if (space.dim() == 1) {
        const std::size_t n = space.cells_x();
        for (const Point& p : points) {
            require(dom.contains(p, slack), ErrorKind::OutsideDomain,
                    "point x = " + std::to_string(p.x) + " lies outside the domain");
            const auto [cell, s] = locate(p.x, dom.lx, n);
            const Eigen::Index a = interior(cell, n);
            const Eigen::Index b = interior(cell + 1, n);
            const double ua = a < 0 ? 0.0 : c[a];
            const double ub = b < 0 ? 0.0 : c[b];
            out.push_back((1.0 - s) * ua + s * ub);
        }
        return out;
    }

    const std::size_t nx = space.cells_x();
    const std::size_t ny = space.cells_y();
    const auto stride = static_cast<Eigen::Index>(ny - 1);
    auto value = [&](std::size_t i, std::size_t j) {
        const Eigen::Index a = interior(i, nx);
        const Eigen::Index b = interior(j, ny);
        return (a < 0 || b < 0) ? 0.0 : c[a * stride + b];
    };
    for (const Point& p : points) {
        require(dom.contains(p, slack), ErrorKind::OutsideDomain,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") lies outside the domain");
        const auto [ci, sx] = locate(p.x, dom.lx, nx);
        const auto [cj, sy] = locate(p.y, dom.ly, ny);
        out.push_back((1.0 - sx) * (1.0 - sy) * value(ci, cj) + sx * (1.0 - sy) * value(ci + 1, cj) +
                      (1.0 - sx) * sy * value(ci, cj + 1) + sx * sy * value(ci + 1, cj + 1));
    }
    return out;
}

Eigen::VectorXd load_vector(const FemSpace& space, const std::function<double(Point)>& f) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dof()));
    const DomainSpec& dom = space.domain();
    if (space.dim() == 1) {
        const std::size_t n = space.cells_x();
        const double hx = dom.lx / n;
        for (std::size_t cell = 0; cell < n; ++cell) {
            const Eigen::Index left = interior(cell, n);
            const Eigen::Index right = interior(cell + 1, n);
            for (int g = 0; g < 3; ++g) {
                const double s = kGaussX[g];
                const double fw = f({(cell + s) * hx, 0.0}) * kGaussW[g] * hx;
                if (left >= 0) b[left] += fw * (1.0 - s);
                if (right >= 0) b[right] += fw * s;
            }
        }
        return b;
    }

    const std::size_t nx = space.cells_x();
    const std::size_t ny = space.cells_y();
    const double hx = dom.lx / nx;
    const double hy = dom.ly / ny;
    const auto stride = static_cast<Eigen::Index>(ny - 1);
    for (std::size_t ci = 0; ci < nx; ++ci) {
        for (std::size_t cj = 0; cj < ny; ++cj) {
            std::array<Eigen::Index, 4> idx{};
            const std::array<std::pair<std::size_t, std::size_t>, 4> corner = {
                {{ci, cj}, {ci + 1, cj}, {ci, cj + 1}, {ci + 1, cj + 1}}};
            for (int q = 0; q < 4; ++q) {
                const Eigen::Index a = interior(corner[q].first, nx);
                const Eigen::Index bb = interior(corner[q].second, ny);
                idx[q] = (a < 0 || bb < 0) ? -1 : a * stride + bb;
            }
            for (int gx = 0; gx < 3; ++gx) {
                for (int gy = 0; gy < 3; ++gy) {
                    const double sx = kGaussX[gx];
                    const double sy = kGaussX[gy];
                    const double fw =
                        f({(ci + sx) * hx, (cj + sy) * hy}) * kGaussW[gx] * kGaussW[gy] * hx * hy;
                    const std::array<double, 4> phi = {(1 - sx) * (1 - sy), sx * (1 - sy),
                                                       (1 - sx) * sy, sx * sy};
                    for (int q = 0; q < 4; ++q) {
                        if (idx[q] >= 0) b[idx[q]] += fw * phi[q];
                    }
                }
            }
        }
    }
    return b;
}

Field project_l2(SpacePtr space, const std::function<double(Point)>& f) {
    Eigen::VectorXd c = space->mass_factor().solve(load_vector(*space, f));
    return Field(std::move(space), std::move(c));
}

Field interpolate(SpacePtr space, const std::function<double(Point)>& f) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(space->dof()));
    for (std::size_t i = 0; i < space->dof(); ++i) {
        c[static_cast<Eigen::Index>(i)] = f(space->nodes()[i]);
    }
    return Field(std::move(space), std::move(c));
}

double discrete_n_norm(std::span<const double> values) {
    require(!values.empty(), ErrorKind::EmptyInput, "discrete norm of an empty point set");
    double s = 0.0;
    for (double v : values) {
        s += v * v;
    }
    return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace fracpod
