#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracpod/inverse.hpp"

namespace fracpod {

enum class ExperimentId { Ex1, Ex2, Ex3, Ex4a, Ex4b, Custom };

std::string_view to_string(ExperimentId id) noexcept;
ExperimentId parse_experiment_id(std::string_view text);

/// How the inverse penalty weight is chosen: the published per-example value
/// (zero for noise-free data), the automatic grid rule, or a fixed value.
enum class LambdaMode { Published, Auto, Fixed };

struct ExperimentConfig {
    ExperimentId id = ExperimentId::Custom;
    ReconstructionConfig recon;
    std::string target = "sin";
    LambdaMode lambda_mode = LambdaMode::Auto;
    double lambda_value = 0.0;
    std::filesystem::path out_dir = "out";
    std::string format = "csv";
    int bench_repeats = 5;

    /// Weight actually used: empty means automatic.
    [[nodiscard]] std::optional<double> resolved_lambda() const;
};

/// Defaults for each experiment id.
ExperimentConfig default_config(ExperimentId id);

/// Named initial velocities: sin, step (1D); sin_sin, poly_sin (2D).
std::function<double(Point)> named_target(const std::string& name, int dim);

/// Parses `key = value` lines ('#' starts a comment). The `experiment` key
/// selects the defaults that the other keys override.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the same format, re-runnable as is.
std::string format_config(const ExperimentConfig& cfg);

/// Arithmetic on numbers and `pi` with * and /, e.g. "pi/200".
double parse_number(std::string_view text);

struct RunSummary {
    std::filesystem::path out_dir;
    std::vector<std::filesystem::path> csv_files;
    std::size_t effective_rank = 0;
    /// Forward comparison (ex1): max |U_full - U_pod| at the full rank.
    double max_abs_fem_pod = 0.0;
    /// Forward comparison: max nodal |U_full(T) - spectral u(T)|.
    double max_abs_fem_exact = 0.0;
    /// Reconstruction runs.
    double relative_error = 0.0;
    double misfit = 0.0;
    double zero_misfit = 0.0;
    double lambda = 0.0;
};

/// Writes all artifacts for one experiment into cfg.out_dir.
RunSummary run_experiment(const ExperimentConfig& cfg);

struct BenchReport {
    int repeats = 0;
    std::size_t rank = 0;
    double full_solve = 0.0;     ///< median seconds, full-order forward solve
    double reduced_solve = 0.0;  ///< median seconds, reduced forward solve
    double pipeline_full = 0.0;     ///< median seconds, full-order baseline (0 for ex1)
    double pipeline_reduced = 0.0;  ///< median seconds, reduced reconstruction

    [[nodiscard]] double solve_ratio() const { return full_solve / reduced_solve; }
    [[nodiscard]] double pipeline_ratio() const { return pipeline_full / pipeline_reduced; }
};

/// Median-of-`repeats` timings of full vs reduced solves and, for
/// reconstruction experiments, of the full-order vs reduced pipeline.
/// `rank_override` > 0 replaces the POD basis by the first columns of the
/// identity (no reduction).
BenchReport bench(const ExperimentConfig& cfg, int repeats = 5, std::size_t rank_override = 0);

std::string format_bench(const BenchReport& report);

/// Inputs of the plot-data files.
struct PlotData {
    SpacePtr space;
    std::optional<Field> a1_true;
    std::optional<Field> a1_recovered;
    Eigen::MatrixXd psi;
    Eigen::VectorXd lambda;
    std::size_t max_basis_files = 5;
};

/// x,value (1D) or x,y,value (2D) files on the closed node grid, plus
/// eigen_decay.csv. Returns the written paths.
std::vector<std::filesystem::path> emit_plotdata(const PlotData& data,
                                                 const std::filesystem::path& dir);

}  // namespace fracpod
