#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fracpod/fem.hpp"
#include "fracpod/mollify.hpp"
#include "fracpod/pod.hpp"
#include "fracpod/solver.hpp"
#include "fracpod/timegrid.hpp"

namespace fracpod {

/// Noise multiple tau in the discrepancy threshold tau * sigma^2.
inline constexpr double kDiscrepancyFactor = 1.1;

/// Everything needed to run one backward reconstruction.
struct ReconstructionConfig {
    DomainSpec domain = DomainSpec::interval(3.141592653589793);
    double alpha = 1.5;
    double T = 0.1;
    std::size_t N = 400;
    double r = 5.0;
    double h = 3.141592653589793 / 200.0;
    std::size_t n_obs = 64;
    double sigma = 0.0;
    std::size_t pod_rank = 5;
    /// Weight of the H1 penalty; empty selects it automatically.
    std::optional<double> lambda_inverse;
    std::uint64_t seed = 0;
    /// Snapshot inner product and whether L1 quotients join the snapshots.
    Norm snapshot_product = Norm::L2;
    bool quotient_snapshots = false;
    /// Eigen-decay exponent of the mollifier rule; 0 selects the default.
    double decay = 0.0;
    /// Discrepancy factor tau of the automatic lambda choice.
    double discrepancy = kDiscrepancyFactor;
    /// Also time the full-order baseline (p full solves).
    bool full_baseline = true;
    /// True initial velocity a_1; generates the synthetic measurements.
    std::function<double(Point)> target;

    /// Throws InvalidParameter on inconsistent settings.
    void validate() const;
};

/// Seed-independent part of a reconstruction: discretization, exact data
/// u_h(., T) from a full-order solve with the target, and sampling points.
struct ForwardSetup {
    SpacePtr space;
    GradedMesh mesh;
    std::shared_ptr<const L1Kernel> kernel;
    double alpha = 1.5;
    Field target;
    Trajectory trajectory;
    std::vector<Point> points;
    std::vector<double> clean_values;
};

ForwardSetup prepare_forward(const ReconstructionConfig& cfg);

struct WallTimes {
    double full_order = 0.0;     ///< G from full-order solves plus normal equations
    double reduced_order = 0.0;  ///< reduced operator, G from reduced solves plus normal equations
    double mollify = 0.0;
    double observation_solve = 0.0;
    double pod = 0.0;
};

struct ReconstructionResult {
    Eigen::VectorXd coeffs;
    Field field;
    double misfit = 0.0;
    double penalty = 0.0;
    double lambda = 0.0;
    WallTimes wall_times;
};

/// m x p matrix whose column j is the reduced terminal response to the
/// source psi_j, sampled at `points`.
Eigen::MatrixXd build_forward_map(const ForwardSetup& setup, const Eigen::MatrixXd& psi,
                                  std::span<const Point> points);

/// Same columns from full-order solves with the nodal source psi_j.
Eigen::MatrixXd build_forward_map_full(const ForwardSetup& setup, const Eigen::MatrixXd& psi,
                                       std::span<const Point> points);

/// H_jk = (psi_j, psi_k)_{H1}.
Eigen::MatrixXd h1_gram(const FemSpace& space, const Eigen::MatrixXd& psi);

/// Solves ((1/m) G^T G + lambda H) c = (1/m) G^T q.
ReconstructionResult reconstruct(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                                 const Eigen::MatrixXd& psi, const SpacePtr& space,
                                 double lambda);

/// Objective of the regularized problem at coefficients c.
double inverse_objective(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& H, const Eigen::VectorXd& c, double lambda);

/// Logarithmic grid of `count` weights over [lo, hi].
std::vector<double> lambda_grid(double lo = 1e-9, double hi = 1e-3, std::size_t count = 12);

/// Largest grid weight whose misfit stays below
/// max(1.1 * smallest misfit, tau * sigma^2).
double select_lambda(const Eigen::MatrixXd& G, const Eigen::VectorXd& q,
                     const Eigen::MatrixXd& psi, const SpacePtr& space, double sigma,
                     double tau = kDiscrepancyFactor);

/// All intermediate products of one pipeline run.
struct PipelineResult {
    ReconstructionResult result;
    ScatteredObservations observations;
    Eigen::VectorXd smoothed;
    double lambda_mollify = 0.0;
    double mollifier_jitter = 0.0;
    Field mollified;
    PodBasis basis;
    std::size_t requested_rank = 0;
    Eigen::MatrixXd G;
};

/// Sample, mollify, train POD on the observation system, reconstruct.
/// Errors are re-thrown with the failing stage in the message.
PipelineResult run_pipeline(const ReconstructionConfig& cfg, const ForwardSetup& setup);
PipelineResult run_pipeline(const ReconstructionConfig& cfg);

/// ||a - b||_{L2} / ||b||_{L2} on the FEM space.
double relative_l2_error(const Field& a, const Field& b);

}  // namespace fracpod
