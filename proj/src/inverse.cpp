#include "fracpod/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "fracpod/error.hpp"

namespace fracpod {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage ") + stage + ": " + e.detail());
    }
}

Eigen::MatrixXd sample_columns(const SpacePtr& space, const Eigen::MatrixXd& nodal,
                               std::span<const Point> points) {
    Eigen::MatrixXd G(static_cast<Eigen::Index>(points.size()), nodal.cols());
    for (Eigen::Index j = 0; j < nodal.cols(); ++j) {
        const auto vals = eval_at(Field(space, nodal.col(j)), points);
        G.col(j) = Eigen::Map<const Eigen::VectorXd>(vals.data(), G.rows());
    }
    return G;
}

}  // namespace

void ReconstructionConfig::validate() const {
    require(alpha > 1.0 && alpha < 2.0, ErrorKind::InvalidParameter, "alpha must lie in (1,2)");
    require(T > 0.0, ErrorKind::InvalidParameter, "T must be positive");
    require(N >= 1, ErrorKind::InvalidParameter, "N must be at least 1");
    require(r >= 1.0, ErrorKind::InvalidParameter, "grading r must be >= 1");
    require(h > 0.0, ErrorKind::InvalidParameter, "h must be positive");
    require(n_obs >= 2, ErrorKind::InvalidParameter, "n_obs must be at least 2");
    require(sigma >= 0.0, ErrorKind::InvalidParameter, "sigma must be non-negative");
    require(pod_rank >= 1, ErrorKind::InvalidParameter, "POD rank must be at least 1");
    require(!lambda_inverse || *lambda_inverse >= 0.0, ErrorKind::InvalidParameter,
            "lambda must be non-negative");
    require(decay >= 0.0, ErrorKind::InvalidParameter, "decay exponent must be non-negative");
    require(static_cast<bool>(target), ErrorKind::InvalidParameter, "no target a_1 given");
}

ForwardSetup prepare_forward(const ReconstructionConfig& cfg) {
    return in_stage("setup", [&] {
        cfg.validate();
        ForwardSetup s;
        s.space = build_space(cfg.domain, cfg.h);
        s.mesh = build_graded_mesh(cfg.T, cfg.N, cfg.r);
        s.kernel = std::make_shared<const L1Kernel>(s.mesh, cfg.alpha / 2.0);
        s.alpha = cfg.alpha;
        s.target = interpolate(s.space, cfg.target);
        s.trajectory = solve_full(*s.space, s.mesh, *s.kernel, SourceSpec{s.target, cfg.alpha});
        s.points = quasi_uniform_points(cfg.domain, cfg.n_obs);
        s.clean_values = terminal_trace(s.trajectory, s.space, s.points);
        return s;
    });
}

Eigen::MatrixXd build_forward_map(const ForwardSetup& setup, const Eigen::MatrixXd& psi,
                                  std::span<const Point> points) {
    const ReducedOperator op = make_reduced_operator(*setup.space, psi);
    // Reduced load of the source psi_j is column j of psi^T M psi.
    const Eigen::MatrixXd Z =
        solve_reduced_terminal(op, setup.mesh, *setup.kernel, setup.alpha, op.mass);
    return sample_columns(setup.space, psi * Z, points);
}

Eigen::MatrixXd build_forward_map_full(const ForwardSetup& setup, const Eigen::MatrixXd& psi,
                                       std::span<const Point> points) {
    const Eigen::MatrixXd terminal =
        solve_full_terminal(*setup.space, setup.mesh, *setup.kernel, setup.alpha, psi);
    return sample_columns(setup.space, terminal, points);
}

Eigen::MatrixXd h1_gram(const FemSpace& space, const Eigen::MatrixXd& psi) {
    Eigen::MatrixXd H = psi.transpose() * (gram_matrix(space, Norm::H1) * psi);
    return 0.5 * (H + H.transpose());
}

double inverse_objective(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& H, const Eigen::VectorXd& c, double lambda) {
    const double m = static_cast<double>(G.rows());
    return (G * c - q).squaredNorm() / m + lambda * c.dot(H * c);
}

ReconstructionResult reconstruct(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                                 const Eigen::MatrixXd& psi, const SpacePtr& space,
                                 double lambda) {
    require(space != nullptr, ErrorKind::InvalidParameter, "no space given");
    require(G.rows() == q.size(), ErrorKind::LengthMismatch,
            "forward map rows do not match the observations");
    require(G.cols() == psi.cols(), ErrorKind::LengthMismatch,
            "forward map columns do not match the basis");
    require(G.rows() >= 1 && G.cols() >= 1, ErrorKind::EmptyInput, "empty forward map");
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidParameter,
            "lambda must be non-negative");

    const double m = static_cast<double>(G.rows());
    const Eigen::MatrixXd H = h1_gram(*space, psi);
    Eigen::MatrixXd normal = G.transpose() * G / m + lambda * H;
    normal = 0.5 * (normal + normal.transpose()).eval();
    const Eigen::VectorXd rhs = G.transpose() * q / m;

    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    const bool ok = llt.info() == Eigen::Success && llt.rcond() > 1e-15;
    require(ok, ErrorKind::SingularSystem,
            lambda == 0.0 ? "normal matrix is singular at lambda = 0; use lambda > 0"
                          : "normal matrix is singular");

    ReconstructionResult res;
    res.lambda = lambda;
    res.coeffs = llt.solve(rhs);
    res.field = Field(space, psi * res.coeffs);
    res.misfit = (G * res.coeffs - q).squaredNorm() / m;
    res.penalty = res.coeffs.dot(H * res.coeffs);
    return res;
}

std::vector<double> lambda_grid(double lo, double hi, std::size_t count) {
    require(lo > 0.0 && hi > lo && count >= 2, ErrorKind::InvalidParameter, "bad lambda grid");
    std::vector<double> grid(count);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t k = 0; k < count; ++k) {
        grid[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) /
                                         static_cast<double>(count - 1));
    }
    return grid;
}

double select_lambda(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                     const Eigen::MatrixXd& psi, const SpacePtr& space, double sigma,
                     double tau) {
    require(sigma >= 0.0 && tau > 0.0, ErrorKind::InvalidParameter,
            "noise level and discrepancy factor must be non-negative");
    const auto grid = lambda_grid();
    std::vector<double> misfit;
    misfit.reserve(grid.size());
    for (const double lam : grid) {
        misfit.push_back(reconstruct(G, q, psi, space, lam).misfit);
    }
    const double best = *std::min_element(misfit.begin(), misfit.end());
    const double threshold = std::max(1.1 * best, tau * sigma * sigma);
    double chosen = grid.front();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (misfit[k] <= threshold) {
            chosen = grid[k];
        }
    }
    return chosen;
}

PipelineResult run_pipeline(const ReconstructionConfig& cfg, const ForwardSetup& setup) {
    cfg.validate();
    PipelineResult out;
    out.requested_rank = cfg.pod_rank;
    const SpacePtr& space = setup.space;

    out.observations = in_stage("sample", [&] {
        return add_noise(setup.points, setup.clean_values, cfg.sigma, cfg.seed);
    });

    auto start = Clock::now();
    in_stage("mollify", [&] {
        const Mollifier mol = Mollifier::for_domain(cfg.domain, out.observations.points);
        const double decay = cfg.decay > 0.0 ? cfg.decay : kDefaultDecay;
        out.lambda_mollify = lambda_rule(out.observations, mol, decay);
        out.smoothed = smooth(out.observations, mol, out.lambda_mollify);
        out.mollified = extend_to_field(mol, out.smoothed, space);
        out.mollifier_jitter = mol.jitter();
        return 0;
    });
    out.result.wall_times.mollify = seconds_since(start);

    start = Clock::now();
    const Trajectory observed = in_stage("observation solve", [&] {
        return solve_full(*space, setup.mesh, *setup.kernel, SourceSpec{out.mollified, cfg.alpha});
    });
    out.result.wall_times.observation_solve = seconds_since(start);

    start = Clock::now();
    out.basis = in_stage("pod", [&] {
        const SnapshotSet set = collect_snapshots(observed, *setup.kernel, cfg.quotient_snapshots,
                                                  space, cfg.snapshot_product);
        return train_basis(set, cfg.pod_rank);
    });
    out.result.wall_times.pod = seconds_since(start);

    const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(
        out.observations.values.data(), static_cast<Eigen::Index>(out.observations.size()));
    const auto solve_with = [&](const Eigen::MatrixXd& G) {
        double lambda = 0.0;
        if (cfg.lambda_inverse) {
            lambda = *cfg.lambda_inverse;
        } else if (cfg.sigma > 0.0) {
            lambda = select_lambda(G, q, out.basis.psi, space, cfg.sigma, cfg.discrepancy);
        }
        return reconstruct(G, q, out.basis.psi, space, lambda);
    };

    const WallTimes stages = out.result.wall_times;
    in_stage("reconstruct", [&] {
        auto t0 = Clock::now();
        out.G = build_forward_map(setup, out.basis.psi, out.observations.points);
        out.result = solve_with(out.G);
        const double reduced = seconds_since(t0);

        double full = 0.0;
        if (cfg.full_baseline) {
            t0 = Clock::now();
            const Eigen::MatrixXd Gf =
                build_forward_map_full(setup, out.basis.psi, out.observations.points);
            (void)solve_with(Gf);
            full = seconds_since(t0);
        }
        out.result.wall_times = stages;
        out.result.wall_times.reduced_order = reduced;
        out.result.wall_times.full_order = full;
        return 0;
    });
    return out;
}

PipelineResult run_pipeline(const ReconstructionConfig& cfg) {
    return run_pipeline(cfg, prepare_forward(cfg));
}

double relative_l2_error(const Field& a, const Field& b) {
    require(a.space == b.space, ErrorKind::SpaceMismatch, "fields live on different spaces");
    const Eigen::VectorXd d = a.coeffs - b.coeffs;
    const double den = inner(*b.space, b.coeffs, b.coeffs, Norm::L2);
    require(den > 0.0, ErrorKind::DivisionByZero, "reference field is zero");
    return std::sqrt(inner(*a.space, d, d, Norm::L2) / den);
}

}  // namespace fracpod
